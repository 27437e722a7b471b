#include "bbalign/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace bbalign {

std::size_t KnnIndex::CellHash::operator()(const CellKey& c) const noexcept {
    std::size_t h = static_cast<std::size_t>(c.x) * 73856093u;
    h ^= static_cast<std::size_t>(c.y) * 19349663u;
    h ^= static_cast<std::size_t>(c.z) * 83492791u;
    return h;
}

KnnIndex::KnnIndex(std::span<const Vec3> points, bool force_exhaustive) : points_(points) {
    use_grid_ = !force_exhaustive && points.size() > kExhaustiveLimit;
    if (!use_grid_) return;

    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = (hi - lo).cwiseMax(1e-12);
    // About 8 points per occupied cell for surface-like data.
    const double area_like = extent.x() * extent.y() + extent.y() * extent.z() + extent.x() * extent.z();
    cell_size_ = std::max(std::sqrt(8.0 * area_like / static_cast<double>(points.size())), 1e-9);
    origin_ = lo;
    for (std::size_t i = 0; i < points.size(); ++i) grid_[cell_of(points[i])].push_back(i);
}

KnnIndex::CellKey KnnIndex::cell_of(const Vec3& p) const {
    const Vec3 c = (p - origin_) / cell_size_;
    return {static_cast<long>(std::floor(c.x())), static_cast<long>(std::floor(c.y())),
            static_cast<long>(std::floor(c.z()))};
}

std::vector<std::size_t> KnnIndex::neighbors(std::size_t query, std::size_t k) const {
    k = std::min(k, points_.size() - 1);
    if (k == 0) return {};
    const Vec3& q = points_[query];
    return use_grid_ ? gridded(q, query, k) : exhaustive(q, query, k);
}

std::size_t KnnIndex::nearest(const Vec3& location) const {
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    return (use_grid_ ? gridded(location, kNone, 1) : exhaustive(location, kNone, 1)).front();
}

namespace {

using Candidate = std::pair<double, std::size_t>;

std::vector<std::size_t> take_k(std::vector<Candidate>& c, std::size_t k) {
    k = std::min(k, c.size());
    std::partial_sort(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k), c.end());
    std::vector<std::size_t> out(k);
    for (std::size_t n = 0; n < k; ++n) out[n] = c[n].second;
    return out;
}

}  // namespace

std::vector<std::size_t> KnnIndex::exhaustive(const Vec3& q, std::size_t skip, std::size_t k) const {
    std::vector<Candidate> c;
    c.reserve(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i != skip) c.emplace_back((points_[i] - q).squaredNorm(), i);
    }
    return take_k(c, k);
}

std::vector<std::size_t> KnnIndex::gridded(const Vec3& q, std::size_t skip, std::size_t k) const {
    const CellKey home = cell_of(q);
    std::vector<Candidate> c;
    // Expand rings of cells until k candidates are found and the ring radius
    // exceeds the k-th distance (points outside ring r are farther than r cells).
    for (long ring = 0;; ++ring) {
        if (ring > 64) return exhaustive(q, skip, k);
        for (long dx = -ring; dx <= ring; ++dx) {
            for (long dy = -ring; dy <= ring; ++dy) {
                for (long dz = -ring; dz <= ring; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                    const auto it = grid_.find({home.x + dx, home.y + dy, home.z + dz});
                    if (it == grid_.end()) continue;
                    for (std::size_t i : it->second) {
                        if (i != skip) c.emplace_back((points_[i] - q).squaredNorm(), i);
                    }
                }
            }
        }
        if (c.size() >= k) {
            std::vector<Candidate> tmp = c;
            std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k - 1), tmp.end());
            const double kth = std::sqrt(tmp[k - 1].first);
            if (kth <= static_cast<double>(ring) * cell_size_) break;
        }
    }
    return take_k(c, k);
}

}  // namespace bbalign
