#ifndef BBALIGN_BB_TRANSLATION_HPP
#define BBALIGN_BB_TRANSLATION_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bbalign/bb_driver.hpp"
#include "bbalign/box_qp.hpp"
#include "bbalign/mixtures.hpp"
#include "bbalign/numerics.hpp"
#include "bbalign/tess_r3.hpp"

namespace bbalign {

/// Gaussian overlap of component k of mixture 1 with component k' of mixture 2
/// rotated by R: D exp(-1/2 (t - m)^T S^-1 (t - m)), m = R mu2 - mu1.
struct TransPair {
    double log_d = 0.0;  // log D minus the problem's log scale
    Vec3 m = Vec3::Zero();
    Mat3 s = Mat3::Identity();
    Mat3 s_inv = Mat3::Identity();
    double s_inv_min_eig = 1.0;  // smallest eigenvalue of S^-1
};

struct TransPairTerms {
    std::vector<TransPair> pairs;
    LogScale scale;
};

TransPairTerms trans_pair_terms(const GaussMixture& gmm1, const GaussMixture& gmm2, const UnitQuaternion& rotation);

/// z(t) for one pair, always <= 0.
double trans_pair_z(const TransPair& pair, const Vec3& t);

/// Scaled objective sum exp(log_d + z(t)).
double trans_objective(const Vec3& t, const TransPairTerms& terms);

struct BoxPairExtrema {
    double lower = 0.0;  // l <= z over the box (vertex scan)
    double upper = 0.0;  // u = max z over the box
};

BoxPairExtrema pair_extrema_box(const BoxNode& box, const TransPair& pair);

/// Chord of e^z on [l, u], premultiplied by D: D e^z <= g z + h.
struct LinearChord {
    double g = 0.0;
    double h = 0.0;
};

LinearChord trans_chord(const TransPair& pair, const BoxPairExtrema& ext);

/// Upper bound on the scaled objective over the box.
double trans_upper_bound(const BoxNode& box, const TransPairTerms& terms, const std::vector<BoxPairExtrema>& extrema);

struct TransLowerBound {
    double value = 0.0;
    Vec3 argmax = Vec3::Zero();
};

/// Objective at the box center.
TransLowerBound trans_lower_bound(const BoxNode& box, const TransPairTerms& terms);

struct TransBbSettings {
    int max_depth = 10;
    double gap_tol = 0.0;
    bool prune = true;
    int threads = 1;
    /// Pairs whose peak over a box is below this fraction of the largest D use
    /// a constant bound from the box distance; 0 keeps every pair exact.
    double negligible_fraction = 1e-14;
    /// Natural log of an objective value (unscaled) already attained elsewhere;
    /// boxes that cannot exceed it are pruned.
    double log_floor = -std::numeric_limits<double>::infinity();
    std::string stage = "trans";
};

struct TransBbResult {
    Vec3 t = Vec3::Zero();
    double best_lower = 0.0;  // scaled
    double best_upper = 0.0;  // scaled
    std::vector<TraceRecord> trace;
    std::uint64_t nodes_evaluated = 0;
    /// Boxes were dropped by log_floor; best_upper still bounds them.
    bool floor_pruned = false;
    LogScale scale;
};

TransBbResult trans_bb(const TransPairTerms& terms, const BoxNode& root, const TransBbSettings& settings);

}  // namespace bbalign

#endif  // BBALIGN_BB_TRANSLATION_HPP
