#ifndef BBALIGN_KNN_HPP
#define BBALIGN_KNN_HPP

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "bbalign/numerics.hpp"

namespace bbalign {

/// k-nearest-neighbor queries over a fixed point set. Exhaustive below
/// kExhaustiveLimit points, uniform grid buckets above.
class KnnIndex {
public:
    static constexpr std::size_t kExhaustiveLimit = 20000;

    explicit KnnIndex(std::span<const Vec3> points, bool force_exhaustive = false);

    /// The k points closest to points[query], excluding the query index itself
    /// (coincident duplicates are kept). Sorted by distance, ties by index.
    std::vector<std::size_t> neighbors(std::size_t query, std::size_t k) const;

    /// Index of the indexed point closest to an arbitrary location.
    std::size_t nearest(const Vec3& location) const;

    std::size_t size() const { return points_.size(); }

private:
    struct CellKey {
        long x, y, z;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        std::size_t operator()(const CellKey& c) const noexcept;
    };

    CellKey cell_of(const Vec3& p) const;
    std::vector<std::size_t> exhaustive(const Vec3& q, std::size_t skip, std::size_t k) const;
    std::vector<std::size_t> gridded(const Vec3& q, std::size_t skip, std::size_t k) const;

    std::span<const Vec3> points_;
    bool use_grid_ = false;
    double cell_size_ = 1.0;
    Vec3 origin_ = Vec3::Zero();
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid_;
};

}  // namespace bbalign

#endif  // BBALIGN_KNN_HPP
