#ifndef BBALIGN_TESS_R3_HPP
#define BBALIGN_TESS_R3_HPP

#include <array>
#include <span>

#include "bbalign/numerics.hpp"

namespace bbalign {

/// Axis-aligned translation cell [lo, hi].
struct BoxNode {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    int level = 0;

    int depth() const { return level; }

    double diagonal() const { return (hi - lo).norm(); }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double volume() const { return (hi - lo).prod(); }
    /// Corner c: bit a of c selects hi over lo on axis a.
    Vec3 corner(int c) const;
    bool contains(const Vec3& t, double slack = 0.0) const;
};

/// Minkowski-difference box {a - b : a in AABB(cloud1), b in AABB(cloud2_rotated)}.
/// It holds every translation that maps a point of cloud 2 onto a point of cloud 1.
BoxNode initial_box(std::span<const Vec3> cloud1, std::span<const Vec3> cloud2_rotated);

/// Axis-aligned bounding box enclosing both clouds.
BoxNode union_box(std::span<const Vec3> cloud1, std::span<const Vec3> cloud2_rotated);

/// Octree split at the box midpoint.
std::array<BoxNode, 8> subdivide(const BoxNode& box);

int trans_depth_for_tolerance(double eps, double gamma0);

}  // namespace bbalign

#endif  // BBALIGN_TESS_R3_HPP
