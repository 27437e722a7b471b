#ifndef BBALIGN_BB_ROTATION_HPP
#define BBALIGN_BB_ROTATION_HPP

#include <vector>

#include "bbalign/bb_driver.hpp"
#include "bbalign/mixtures.hpp"
#include "bbalign/numerics.hpp"
#include "bbalign/tess_s3.hpp"

namespace bbalign {

/// Constants of one component pair (k of mixture 1, k' of mixture 2).
struct RotPair {
    double log_d = 0.0;  // log D_{kk'} minus the problem's log scale
    double tau1 = 0.0;
    double tau2 = 0.0;
    Vec3 mu1 = Vec3::UnitZ();
    Vec3 mu2 = Vec3::UnitZ();
    SymMat4 xi;
};

/// The rotational objective sum_{kk'} D f(|tau1 mu1 + tau2 q o mu2|), stored
/// relative to `scale`. Maximizers q rotate mixture 2 onto mixture 1.
struct RotPairTerms {
    std::vector<RotPair> pairs;
    LogScale scale;
};

RotPairTerms rot_pair_terms(const VmfMixture& mix1, const VmfMixture& mix2);

/// z_{kk'}(q) for one pair.
double rot_pair_z(const RotPair& pair, const UnitQuaternion& q);

/// Scaled objective value at q.
double rot_objective(const UnitQuaternion& q, const RotPairTerms& terms);

struct PairExtrema {
    double lower = 0.0;  // l_{kk'}
    double upper = 0.0;  // u_{kk'}
};

/// How the range of z over a node is obtained.
///  Cap:  spherical cap around the center-rotated mu2 whose radius is twice
///        the node's angular radius. Always encloses the true range.
///  Cone: closest/furthest direction in the cone spanned by the vertex-rotated
///        mu2 (14 vertex subsets). Tighter, but q o mu2 can leave that cone,
///        so on coarse nodes the range and the upper bound can be too small.
enum class RotExtrema { Cone, Cap };

PairExtrema pair_extrema(const TetraNode& node, const RotPair& pair, RotExtrema mode = RotExtrema::Cap);

/// Chord in z^2 through (l, f(l)) and (u, f(u)), premultiplied by D:
/// D f(z) <= g z^2 + h on [l, u].
struct QuadraticChord {
    double g = 0.0;
    double h = 0.0;
};

QuadraticChord rot_chord(const RotPair& pair, const PairExtrema& ext);

/// Upper bound on the scaled objective over the node.
double rot_upper_bound(const TetraNode& node, const RotPairTerms& terms, const std::vector<PairExtrema>& extrema);

struct RotLowerBound {
    double value = 0.0;
    UnitQuaternion argmax;
};

/// Objective at the node center.
RotLowerBound rot_lower_bound(const TetraNode& node, const RotPairTerms& terms);

struct RotCandidate {
    UnitQuaternion q;
    double lower = 0.0;  // scaled
    double upper = 0.0;  // scaled
};

struct RotBbSettings {
    int max_depth = 11;
    double gap_tol = 0.0;
    bool prune = true;
    int threads = 1;
    /// Relative slack below the best lower bound for keeping extra candidates.
    double candidate_slack = 1e-3;
    int max_candidates = 8;
    /// Candidates closer than this to an earlier one are dropped; negative
    /// means the rotational tolerance guaranteed at max_depth.
    double dedup_angle_rad = -1.0;
    RotExtrema extrema = RotExtrema::Cap;
    std::string stage = "rot";
};

struct RotBbResult {
    std::vector<RotCandidate> candidates;  // sorted by lower bound, descending
    double best_lower = 0.0;
    double best_upper = 0.0;
    std::vector<TraceRecord> trace;
    std::uint64_t nodes_evaluated = 0;
    LogScale scale;
};

RotBbResult rot_bb(const RotPairTerms& terms, const RotBbSettings& settings,
                   const Tessellation& tess = default_tessellation());

}  // namespace bbalign

#endif  // BBALIGN_BB_ROTATION_HPP
