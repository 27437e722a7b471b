#ifndef BBALIGN_TESS_S3_HPP
#define BBALIGN_TESS_S3_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bbalign/numerics.hpp"

namespace bbalign {

/// cos(36 deg): pairwise vertex dot product of every 600-cell tetrahedron.
inline const double kCos36 = std::cos(kPi / 5.0);

/// A tetrahedron of the S^3 cover, projected radially onto the sphere. The
/// region is {q : |q| = 1, q = Q alpha, alpha >= 0} with Q the vertex columns.
class TetraNode {
public:
    TetraNode() = default;
    TetraNode(const std::array<UnitQuaternion, 4>& vertices, int depth);

    const std::array<UnitQuaternion, 4>& vertices() const { return vertices_; }
    const UnitQuaternion& vertex(int idx) const { return vertices_[idx]; }
    int depth() const { return depth_; }
    /// Minimum pairwise vertex dot product.
    double min_dot() const { return min_dot_; }
    double max_dot() const;
    /// Q with vertex quaternions (i, j, k, r) as columns.
    Mat4 vertex_matrix() const;
    /// Normalized vertex sum, a point strictly inside the region.
    UnitQuaternion center() const;

private:
    std::array<UnitQuaternion, 4> vertices_;
    int depth_ = 0;
    double min_dot_ = 1.0;
};

struct Tessellation {
    std::vector<UnitQuaternion> vertices;            // 120
    std::vector<std::array<std::uint16_t, 4>> cells; // 600, indices into vertices
    std::vector<TetraNode> hemisphere_cells;         // 330
};

/// Builds the 600-cell and keeps the cells with a vertex strictly above the
/// equator of the north pole (0,0,0,1). Throws InvariantViolation if the counts
/// are not (120, 600, 330).
Tessellation generate_600cell();

/// Cached construction; safe to call from several threads.
const Tessellation& default_tessellation();

/// Eight children: four corner tetrahedra and four interior ones split along
/// the internal edge whose endpoints have the largest dot product.
std::array<TetraNode, 8> subdivide(const TetraNode& node);

/// Radial containment of exactly this quaternion: Q^-1 q >= -1e-9.
/// Throws InvariantViolation if the vertex matrix is numerically singular.
bool contains_ray(const TetraNode& node, const UnitQuaternion& q);

/// Containment of the rotation q after choosing the representative with a
/// nonnegative north component; both signs are tested on the equator.
bool contains(const TetraNode& node, const UnitQuaternion& q);

/// Containment of either sign, i.e. whether the cell covers the rotation.
bool covers_rotation(const TetraNode& node, const UnitQuaternion& q);

/// Smallest depth whose guaranteed rotational tolerance is eps_rad.
int rot_depth_for_tolerance(double eps_rad);

/// Rotational tolerance guaranteed at the given depth (inverse of the above).
double rot_tolerance_for_depth(int depth);

/// Lower bound on the minimum vertex dot product after `depth` refinements.
double min_dot_lower_bound(int depth);

/// Binary cache: magic "S3TESS01", 120x4 float64 vertices, 600x4 uint16 cell
/// indices, all little-endian. Hemisphere cells are rebuilt on load.
void save_tessellation(const Tessellation& tess, const std::string& path);
Tessellation load_tessellation(const std::string& path);

}  // namespace bbalign

#endif  // BBALIGN_TESS_S3_HPP
