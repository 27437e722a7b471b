#include "bbalign/bb_translation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>

#include "bbalign/errors.hpp"

namespace bbalign {

TransPairTerms trans_pair_terms(const GaussMixture& gmm1, const GaussMixture& gmm2, const UnitQuaternion& rotation) {
    const Mat3 r = rotation.matrix();
    TransPairTerms terms;
    terms.pairs.reserve(gmm1.size() * gmm2.size());
    double z = -std::numeric_limits<double>::infinity();
    for (const auto& c1 : gmm1) {
        for (const auto& c2 : gmm2) {
            TransPair p;
            p.m = r * c2.mean - c1.mean;
            p.s = c1.cov + r * c2.cov * r.transpose();
            p.s = 0.5 * (p.s + p.s.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Mat3> es(p.s);
            const double lmin = es.eigenvalues()[0];
            if (!(lmin > 0.0)) throw SingularMatrix("pair covariance is not positive definite");
            p.s_inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
            p.s_inv = 0.5 * (p.s_inv + p.s_inv.transpose()).eval();
            p.s_inv_min_eig = 1.0 / es.eigenvalues()[2];
            const double log_det = es.eigenvalues().array().log().sum();
            p.log_d = std::log(c1.weight) + std::log(c2.weight) - 0.5 * (3.0 * std::log(2.0 * kPi) + log_det);
            if (!std::isfinite(p.log_d)) throw InvariantViolation("non-finite translational pair constant");
            z = std::max(z, p.log_d);
            terms.pairs.push_back(p);
        }
    }
    if (terms.pairs.empty()) throw InvariantViolation("translational problem without mixture components");
    terms.scale.log_factor = z;
    for (auto& p : terms.pairs) p.log_d -= z;
    return terms;
}

double trans_pair_z(const TransPair& pair, const Vec3& t) {
    const Vec3 d = t - pair.m;
    return std::min(0.0, -0.5 * d.dot(pair.s_inv * d));
}

double trans_objective(const Vec3& t, const TransPairTerms& terms) {
    double sum = 0.0;
    for (const auto& p : terms.pairs) sum += std::exp(p.log_d + trans_pair_z(p, t));
    return sum;
}

BoxPairExtrema pair_extrema_box(const BoxNode& box, const TransPair& pair) {
    BoxPairExtrema ext;
    if (box.contains(pair.m)) {
        ext.upper = 0.0;
    } else {
        const Mat3 a = -0.5 * pair.s_inv;
        const Vec3 b = pair.s_inv * pair.m;
        const double c = -0.5 * pair.m.dot(b);
        ext.upper = std::min(0.0, max_quadratic_over_box(a, b, c, box).value);
    }
    double lo = 0.0;
    for (int v = 0; v < 8; ++v) lo = std::min(lo, trans_pair_z(pair, box.corner(v)));
    ext.lower = std::min(lo, ext.upper);
    return ext;
}

LinearChord trans_chord(const TransPair& pair, const BoxPairExtrema& ext) {
    const double u = ext.upper;
    const double l = ext.lower;
    const double du = std::exp(pair.log_d + u);
    if (u - l < 1e-12) return {0.0, du};
    // D (e^u - e^l) / (u - l) = D e^u (1 - e^{l-u}) / (u - l)
    const double g = du * -std::expm1(l - u) / (u - l);
    return {g, du - g * u};
}

namespace {

double assemble_bound(const BoxNode& box, const TransPairTerms& terms, const std::vector<BoxPairExtrema>& extrema,
                      const std::vector<char>* exact) {
    Mat3 a = Mat3::Zero();
    Vec3 b = Vec3::Zero();
    double c = 0.0;
    for (std::size_t n = 0; n < terms.pairs.size(); ++n) {
        const TransPair& p = terms.pairs[n];
        if (exact && !(*exact)[n]) {
            c += std::exp(p.log_d + extrema[n].upper);
            continue;
        }
        const LinearChord ch = trans_chord(p, extrema[n]);
        c += ch.h;
        if (ch.g == 0.0) continue;
        // g z + h with z = -1/2 t^T S^-1 t + t^T S^-1 m - 1/2 m^T S^-1 m
        const Vec3 sm = p.s_inv * p.m;
        a -= (0.5 * ch.g) * p.s_inv;
        b += ch.g * sm;
        c -= 0.5 * ch.g * p.m.dot(sm);
    }
    a = 0.5 * (a + a.transpose()).eval();
    return max_quadratic_over_box(a, b, c, box).value;
}

double squared_distance_to_box(const BoxNode& box, const Vec3& p) {
    const Vec3 d = (box.lo - p).cwiseMax(p - box.hi).cwiseMax(Vec3::Zero());
    return d.squaredNorm();
}

}  // namespace

double trans_upper_bound(const BoxNode& box, const TransPairTerms& terms,
                         const std::vector<BoxPairExtrema>& extrema) {
    return assemble_bound(box, terms, extrema, nullptr);
}

TransLowerBound trans_lower_bound(const BoxNode& box, const TransPairTerms& terms) {
    const Vec3 c = box.center();
    return {trans_objective(c, terms), c};
}

TransBbResult trans_bb(const TransPairTerms& terms, const BoxNode& root, const TransBbSettings& settings) {
    using Entry = BoundedNode<BoxNode, Vec3>;
    const double log_cut = settings.negligible_fraction > 0.0 ? std::log(settings.negligible_fraction)
                                                              : -std::numeric_limits<double>::infinity();
    auto evaluate = [&](const BoxNode& box) {
        std::vector<BoxPairExtrema> ext(terms.pairs.size());
        std::vector<char> exact(terms.pairs.size(), 1);
        for (std::size_t n = 0; n < terms.pairs.size(); ++n) {
            const TransPair& p = terms.pairs[n];
            // z <= -1/2 dist(m, box)^2 lambda_min(S^-1) on the box.
            const double cheap_u = -0.5 * squared_distance_to_box(box, p.m) * p.s_inv_min_eig;
            if (p.log_d + cheap_u < log_cut) {
                exact[n] = 0;
                ext[n] = {cheap_u, cheap_u};
            } else {
                ext[n] = pair_extrema_box(box, p);
            }
        }
        const TransLowerBound lb = trans_lower_bound(box, terms);
        Entry e{box, lb.value, assemble_bound(box, terms, ext, &exact), lb.argmax, 0};
        e.upper = std::max(e.upper, e.lower);
        return e;
    };
    auto split = [](const BoxNode& box) { return subdivide(box); };

    BbSettings bs;
    bs.max_depth = settings.max_depth;
    bs.gap_tol = settings.gap_tol;
    bs.prune = settings.prune;
    bs.threads = settings.threads;
    bs.stage = settings.stage;
    if (std::isfinite(settings.log_floor)) bs.prune_floor = std::exp(settings.log_floor - terms.scale.log_factor);
    auto outcome = branch_and_bound<BoxNode, Vec3>(std::vector<BoxNode>{root}, evaluate, split, bs);

    TransBbResult res;
    res.t = outcome.best;
    res.best_lower = outcome.best_lower;
    res.best_upper = outcome.best_upper;
    res.trace = std::move(outcome.trace);
    res.nodes_evaluated = outcome.nodes_evaluated;
    res.floor_pruned = outcome.floor_pruned;
    res.scale = terms.scale;
    return res;
}

}  // namespace bbalign
