#include "bbalign/tess_r3.hpp"

#include <algorithm>

#include "bbalign/errors.hpp"

namespace bbalign {

Vec3 BoxNode::corner(int c) const {
    return {(c & 1) ? hi.x() : lo.x(), (c & 2) ? hi.y() : lo.y(), (c & 4) ? hi.z() : lo.z()};
}

bool BoxNode::contains(const Vec3& t, double slack) const {
    return (t.array() >= lo.array() - slack).all() && (t.array() <= hi.array() + slack).all();
}

namespace {

void bounds(std::span<const Vec3> cloud, Vec3& lo, Vec3& hi) {
    if (cloud.empty()) throw EmptyCloud();
    lo = hi = cloud.front();
    for (const Vec3& p : cloud) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
}

}  // namespace

BoxNode initial_box(std::span<const Vec3> cloud1, std::span<const Vec3> cloud2_rotated) {
    Vec3 lo1, hi1, lo2, hi2;
    bounds(cloud1, lo1, hi1);
    bounds(cloud2_rotated, lo2, hi2);
    return {lo1 - hi2, hi1 - lo2, 0};
}

BoxNode union_box(std::span<const Vec3> cloud1, std::span<const Vec3> cloud2_rotated) {
    Vec3 lo1, hi1, lo2, hi2;
    bounds(cloud1, lo1, hi1);
    bounds(cloud2_rotated, lo2, hi2);
    return {lo1.cwiseMin(lo2), hi1.cwiseMax(hi2), 0};
}

std::array<BoxNode, 8> subdivide(const BoxNode& box) {
    const Vec3 mid = box.center();
    std::array<BoxNode, 8> out;
    for (int c = 0; c < 8; ++c) {
        BoxNode& child = out[c];
        for (int a = 0; a < 3; ++a) {
            const bool upper = (c >> a) & 1;
            child.lo[a] = upper ? mid[a] : box.lo[a];
            child.hi[a] = upper ? box.hi[a] : mid[a];
        }
        child.level = box.level + 1;
    }
    return out;
}

int trans_depth_for_tolerance(double eps, double gamma0) {
    if (gamma0 <= eps) return 0;
    return std::max(0, static_cast<int>(std::ceil(std::log2(gamma0 / eps) - 1e-12)));
}

}  // namespace bbalign
