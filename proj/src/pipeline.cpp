#include "bbalign/pipeline.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "bbalign/bb_rotation.hpp"
#include "bbalign/bb_translation.hpp"
#include "bbalign/errors.hpp"
#include "bbalign/knn.hpp"

namespace bbalign {

int resolved_rot_depth(const AlignmentConfig& config) {
    if (config.rot_depth) return *config.rot_depth;
    if (config.rot_tol_deg) return rot_depth_for_tolerance(deg_to_rad(*config.rot_tol_deg));
    return AlignmentConfig::kDefaultRotDepth;
}

int resolved_trans_depth(const AlignmentConfig& config, double gamma0) {
    if (config.trans_depth) return *config.trans_depth;
    if (config.trans_tol) return trans_depth_for_tolerance(*config.trans_tol, gamma0);
    return AlignmentConfig::kDefaultTransDepth;
}

const std::array<UnitQuaternion, 24>& mw_group() {
    static const std::array<UnitQuaternion, 24> group = [] {
        std::array<UnitQuaternion, 24> out;
        std::size_t n = 0;
        std::array<int, 3> perm{0, 1, 2};
        do {
            for (int signs = 0; signs < 8; ++signs) {
                Mat3 m = Mat3::Zero();
                for (int row = 0; row < 3; ++row) m(row, perm[row]) = (signs >> row & 1) ? -1.0 : 1.0;
                if (m.determinant() < 0.0) continue;
                out[n++] = UnitQuaternion::from_matrix(m);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (n != 24) throw InvariantViolation("cube rotation group must have 24 elements");
        return out;
    }();
    return group;
}

std::array<UnitQuaternion, 24> mw_expand(const UnitQuaternion& q) {
    std::array<UnitQuaternion, 24> out;
    const auto& g = mw_group();
    for (std::size_t n = 0; n < 24; ++n) out[n] = q * g[n];
    return out;
}

std::vector<Vec3> apply_transform(const UnitQuaternion& q, const Vec3& t, std::span<const Vec3> points) {
    const Mat3 r = q.matrix();
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const Vec3& p : points) out.push_back(r * p + t);
    return out;
}

double nearest_rmse(std::span<const Vec3> from, std::span<const Vec3> to) {
    if (from.empty() || to.empty()) throw EmptyCloud();
    const KnnIndex index(to);
    double sum = 0.0;
    for (const Vec3& p : from) sum += (to[index.nearest(p)] - p).squaredNorm();
    return std::sqrt(sum / static_cast<double>(from.size()));
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void prepare(WeightedCloud& cloud, const Vec3& viewpoint, std::size_t k) {
    if (cloud.points.empty()) throw EmptyCloud();
    if (!cloud.has_normals()) cloud.normals = estimate_normals(cloud.points, k, viewpoint).normals;
    if (cloud.weights.size() != cloud.points.size()) cloud.weights = point_weights(cloud.points);
}

double bbox_diagonal(std::span<const Vec3> points) {
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

// Rotation hypothesis in the internal convention: q maps target normals onto
// source normals, and source + t ~ R(q) target.
struct Hypothesis {
    UnitQuaternion q;
    double lambda_deg;
    int mw_index;
    double rot_lower;
    double rot_upper;
    std::uint64_t rot_nodes;
};

std::string format_lambda(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace

AlignmentResult align(WeightedCloud source, WeightedCloud target, const AlignmentConfig& config,
                      const Tessellation& tess) {
    const auto t_total = Clock::now();
    AlignmentResult result;
    if (config.lambda_deg_list.empty()) throw InvariantViolation("no angular scales given");

    auto t_stage = Clock::now();
    prepare(source, config.source_viewpoint, config.knn_k);
    prepare(target, config.target_viewpoint, config.knn_k);
    result.timings_ms["normals_weights"] = ms_since(t_stage);

    t_stage = Clock::now();
    const double lambda_x = config.lambda_x > 0.0 ? config.lambda_x : 0.1 * bbox_diagonal(source.points);
    const double gamma_identity = initial_box(target.points, source.points).diagonal();
    const double floor_len = config.sigma_floor_scale * gamma_identity;
    const double sigma2_floor = std::max(floor_len * floor_len, std::numeric_limits<double>::min());
    const GaussMixture gmm_source = fit_gauss_mixture(
        source.points, source.weights, dp_means(source.points, source.weights, lambda_x).labels, sigma2_floor);
    const GaussMixture gmm_target = fit_gauss_mixture(
        target.points, target.weights, dp_means(target.points, target.weights, lambda_x).labels, sigma2_floor);
    result.source_components = gmm_source.size();
    result.target_components = gmm_target.size();
    result.timings_ms["gmm"] = ms_since(t_stage);

    // Rotational stage, one run per angular scale.
    t_stage = Clock::now();
    result.rot_depth = resolved_rot_depth(config);
    const double dedup = rot_tolerance_for_depth(result.rot_depth);
    std::vector<Hypothesis> hypotheses;
    auto add_hypothesis = [&](const Hypothesis& h) {
        for (const Hypothesis& o : hypotheses) {
            if (rotation_angle(o.q, h.q) < dedup) return;
        }
        hypotheses.push_back(h);
    };
    for (double lambda_deg : config.lambda_deg_list) {
        const VmfMixture vmf_source = fit_vmf_mixture(
            source.normals, source.weights, dp_vmf_means(source.normals, source.weights, lambda_deg).labels);
        const VmfMixture vmf_target = fit_vmf_mixture(
            target.normals, target.weights, dp_vmf_means(target.normals, target.weights, lambda_deg).labels);
        const RotPairTerms terms = rot_pair_terms(vmf_source, vmf_target);

        RotBbSettings rs;
        rs.extrema = config.cone_rot_extrema ? RotExtrema::Cone : RotExtrema::Cap;
        rs.max_depth = result.rot_depth;
        rs.threads = config.threads;
        rs.candidate_slack = config.candidate_slack;
        rs.max_candidates = config.max_candidates;
        rs.stage = "rot:" + format_lambda(lambda_deg);
        RotBbResult rb = rot_bb(terms, rs, tess);
        if (rb.candidates.empty()) throw InvariantViolation("rotational search returned no candidate");
        result.trace.insert(result.trace.end(), rb.trace.begin(), rb.trace.end());

        const double log_global_upper = std::log(rb.best_upper) + terms.scale.log_factor;
        for (const RotCandidate& c : rb.candidates) {
            const double lo = std::log(c.lower) + terms.scale.log_factor;
            const double hi = std::log(c.upper) + terms.scale.log_factor;
            if (!config.mw_enabled) {
                add_hypothesis({c.q, lambda_deg, -1, lo, hi, rb.nodes_evaluated});
                continue;
            }
            const auto expanded = mw_expand(c.q);
            for (int g = 0; g < 24; ++g) {
                // A symmetric copy lies outside the node that produced the bounds;
                // its own value and the global upper bound remain valid.
                const double value = g == 0 ? lo : std::log(rot_objective(expanded[g], terms)) + terms.scale.log_factor;
                add_hypothesis({expanded[g], lambda_deg, g, value, g == 0 ? hi : log_global_upper, rb.nodes_evaluated});
            }
        }
    }
    result.timings_ms["rotation"] = ms_since(t_stage);

    // Translational stage, one run per hypothesis.
    t_stage = Clock::now();
    double best_log_lower = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < hypotheses.size(); ++n) {
        const Hypothesis& h = hypotheses[n];
        const std::vector<Vec3> target_rot = apply_transform(h.q, Vec3::Zero(), target.points);
        const BoxNode root =
            config.union_root_box ? union_box(source.points, target_rot) : initial_box(target_rot, source.points);
        const TransPairTerms terms = trans_pair_terms(gmm_source, gmm_target, h.q);

        TransBbSettings ts;
        ts.max_depth = resolved_trans_depth(config, root.diagonal());
        ts.threads = config.threads;
        ts.stage = "trans:" + std::to_string(n);
        if (config.share_incumbent) ts.log_floor = best_log_lower;
        TransBbResult tb = trans_bb(terms, root, ts);
        result.trace.insert(result.trace.end(), tb.trace.begin(), tb.trace.end());

        CandidateDiagnostics d;
        d.q = h.q.conjugate();
        d.t = rotate(d.q, tb.t);
        d.lambda_deg = h.lambda_deg;
        d.mw_index = h.mw_index;
        d.rot_lower = h.rot_lower;
        d.rot_upper = h.rot_upper;
        d.trans_lower = std::log(tb.best_lower) + terms.scale.log_factor;
        d.trans_upper = std::log(tb.best_upper) + terms.scale.log_factor;
        d.rot_nodes = h.rot_nodes;
        d.trans_nodes = tb.nodes_evaluated;
        d.trans_pruned = tb.floor_pruned;
        if (d.trans_lower > best_log_lower) {
            best_log_lower = d.trans_lower;
            result.selected = n;
            result.root_box = root;
            result.trans_depth = ts.max_depth;
        }
        result.candidates.push_back(d);
    }
    result.timings_ms["translation"] = ms_since(t_stage);
    if (result.candidates.empty()) throw InvariantViolation("no rotation candidates");

    const CandidateDiagnostics& best = result.candidates[result.selected];
    result.q = best.q;
    result.t = best.t;
    result.rot_lower = best.rot_lower;
    result.rot_upper = best.rot_upper;
    result.trans_lower = best.trans_lower;
    result.trans_upper = best.trans_upper;
    result.rmse = nearest_rmse(apply_transform(result.q, result.t, source.points), target.points);
    result.timings_ms["total"] = ms_since(t_total);
    return result;
}

}  // namespace bbalign
