#ifndef BBALIGN_PIPELINE_HPP
#define BBALIGN_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bbalign/bb_driver.hpp"
#include "bbalign/mixtures.hpp"
#include "bbalign/numerics.hpp"
#include "bbalign/tess_r3.hpp"
#include "bbalign/tess_s3.hpp"

namespace bbalign {

struct AlignmentConfig {
    std::vector<double> lambda_deg_list{45.0, 65.0, 80.0};
    /// DP-means scale; non-positive means 0.1 times the source bounding-box diagonal.
    double lambda_x = 0.0;

    /// A depth takes precedence over a tolerance; neither set means the default depth.
    std::optional<int> rot_depth;
    std::optional<double> rot_tol_deg;
    std::optional<int> trans_depth;
    /// Translational tolerance as an absolute length.
    std::optional<double> trans_tol;

    bool mw_enabled = false;
    std::size_t knn_k = 10;
    int threads = 1;
    int max_candidates = 8;
    double candidate_slack = 1e-3;
    /// sigma2_floor = (sigma_floor_scale * root-box diagonal)^2.
    double sigma_floor_scale = 1e-3;
    /// Use the bounding box of both clouds as the translational root instead of
    /// the Minkowski-difference box.
    bool union_root_box = false;
    /// Share the best translational value across candidates to prune hopeless ones.
    bool share_incumbent = true;
    /// Vertex-cone concentration ranges instead of the enclosing cap (see RotExtrema).
    bool cone_rot_extrema = false;
    Vec3 source_viewpoint = Vec3::Zero();
    Vec3 target_viewpoint = Vec3::Zero();
    std::uint64_t seed = 0;

    static constexpr int kDefaultRotDepth = 11;
    static constexpr int kDefaultTransDepth = 10;
};

/// Stage depth actually used, resolved from the configuration.
int resolved_rot_depth(const AlignmentConfig& config);
int resolved_trans_depth(const AlignmentConfig& config, double gamma0);

/// One evaluated rotation hypothesis. Bounds are natural logarithms of the
/// objective values; rotation and translation are in the reported convention
/// (target ~ q o source + t).
struct CandidateDiagnostics {
    UnitQuaternion q;
    Vec3 t = Vec3::Zero();
    double lambda_deg = 0.0;
    int mw_index = -1;  // index into mw_group(), -1 without expansion
    double rot_lower = 0.0;
    double rot_upper = 0.0;
    double trans_lower = 0.0;
    double trans_upper = 0.0;
    std::uint64_t rot_nodes = 0;
    std::uint64_t trans_nodes = 0;
    /// The translational search stopped early because it could not beat an
    /// earlier candidate; trans_upper is still a valid bound.
    bool trans_pruned = false;
};

struct AlignmentResult {
    UnitQuaternion q;
    Vec3 t = Vec3::Zero();
    double rot_lower = 0.0;  // log
    double rot_upper = 0.0;  // log
    double trans_lower = 0.0;  // log
    double trans_upper = 0.0;  // log
    int rot_depth = 0;
    int trans_depth = 0;
    std::size_t selected = 0;  // index into candidates
    std::vector<CandidateDiagnostics> candidates;
    std::vector<TraceRecord> trace;
    std::map<std::string, double> timings_ms;
    /// Root box of the selected candidate (internal translation frame).
    BoxNode root_box;
    std::size_t source_components = 0;
    std::size_t target_components = 0;
    /// RMS nearest-neighbor distance from the transformed source to the target.
    double rmse = 0.0;
};

/// Global alignment of source onto target: target ~ q o source + t.
/// Normals and weights are computed when absent.
AlignmentResult align(WeightedCloud source, WeightedCloud target, const AlignmentConfig& config,
                      const Tessellation& tess = default_tessellation());

/// The 24 rotations of the cube, identity first.
const std::array<UnitQuaternion, 24>& mw_group();

/// q composed with every cube symmetry (applied first), in mw_group() order.
std::array<UnitQuaternion, 24> mw_expand(const UnitQuaternion& q);

std::vector<Vec3> apply_transform(const UnitQuaternion& q, const Vec3& t, std::span<const Vec3> points);

/// RMS distance from each point of `from` to its nearest neighbor in `to`.
double nearest_rmse(std::span<const Vec3> from, std::span<const Vec3> to);

}  // namespace bbalign

#endif  // BBALIGN_PIPELINE_HPP
