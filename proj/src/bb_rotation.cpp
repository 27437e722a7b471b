#include "bbalign/bb_rotation.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <limits>

#include "bbalign/errors.hpp"

namespace bbalign {

RotPairTerms rot_pair_terms(const VmfMixture& mix1, const VmfMixture& mix2) {
    RotPairTerms terms;
    terms.pairs.reserve(mix1.size() * mix2.size());
    double z = -std::numeric_limits<double>::infinity();
    for (const auto& c1 : mix1) {
        for (const auto& c2 : mix2) {
            RotPair p;
            p.log_d = std::log(2.0 * kPi) + std::log(c1.weight) + std::log(c2.weight) + log_vmf_const(c1.tau) +
                      log_vmf_const(c2.tau);
            p.tau1 = c1.tau;
            p.tau2 = c2.tau;
            p.mu1 = c1.mean.normalized();
            p.mu2 = c2.mean.normalized();
            p.xi = xi_matrix(p.mu1, p.mu2);
            z = std::max(z, p.log_d + p.tau1 + p.tau2);
            terms.pairs.push_back(p);
        }
    }
    if (terms.pairs.empty()) throw InvariantViolation("rotational problem without mixture components");
    terms.scale.log_factor = z;
    for (auto& p : terms.pairs) p.log_d -= z;
    return terms;
}

namespace {

double z_from_cos(const RotPair& p, double c) {
    c = std::clamp(c, -1.0, 1.0);
    return std::sqrt(std::max(0.0, p.tau1 * p.tau1 + p.tau2 * p.tau2 + 2.0 * p.tau1 * p.tau2 * c));
}

}  // namespace

double rot_pair_z(const RotPair& pair, const UnitQuaternion& q) {
    return z_from_cos(pair, pair.xi.quadratic_form(q.vec()));
}

double rot_objective(const UnitQuaternion& q, const RotPairTerms& terms) {
    const Vec4 v = q.vec();
    double sum = 0.0;
    for (const auto& p : terms.pairs) {
        const double z = z_from_cos(p, p.xi.quadratic_form(v));
        sum += std::exp(p.log_d + log_f_rot(z));
    }
    return sum;
}

namespace {

// Extremes of mu . x over x in cone(m_0..m_3) on the unit sphere, using the
// stationary points of every face with at most three generators.
struct ConeExtremes {
    double max_dot;
    double min_dot;
};

ConeExtremes cone_extremes(const std::array<Vec3, 4>& m, const Vec3& mu) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    auto consider = [&](double v) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    };
    std::array<double, 4> b{};
    for (int a = 0; a < 4; ++a) {
        b[a] = mu.dot(m[a]);
        consider(b[a]);
    }
    for (int a = 0; a < 4; ++a) {
        for (int c = a + 1; c < 4; ++c) {
            const double g = m[a].dot(m[c]);
            const double det = 1.0 - g * g;
            if (det < 1e-12) continue;
            const double xa = (b[a] - g * b[c]) / det;
            const double xc = (b[c] - g * b[a]) / det;
            const double norm = std::sqrt(std::max(0.0, b[a] * xa + b[c] * xc));
            if (xa >= 0.0 && xc >= 0.0) {
                consider(norm);
            } else if (xa <= 0.0 && xc <= 0.0) {
                consider(-norm);
            }
        }
    }
    for (int skip = 0; skip < 4; ++skip) {
        Mat3 mm;
        int col = 0;
        for (int a = 0; a < 4; ++a) {
            if (a != skip) mm.col(col++) = m[a];
        }
        const double det = mm.determinant();
        if (std::abs(det) < 1e-14) continue;
        const Vec3 x = mm.inverse() * mu;
        const double norm = mu.norm();
        if ((x.array() >= 0.0).all()) {
            consider(norm);
        } else if ((x.array() <= 0.0).all()) {
            consider(-norm);
        }
    }
    return {std::clamp(hi, -1.0, 1.0), std::clamp(lo, -1.0, 1.0)};
}

struct NodeFrame {
    std::array<Mat3, 4> rotations;
    Mat4 q;
    Mat4 gram;
    Mat3 center_rotation;
    double radius = 0.0;  // largest angle from the center to a member quaternion
};

NodeFrame frame_of(const TetraNode& node) {
    NodeFrame f;
    for (int a = 0; a < 4; ++a) f.rotations[a] = node.vertex(a).matrix();
    f.q = node.vertex_matrix();
    f.gram = f.q.transpose() * f.q;
    const UnitQuaternion c = node.center();
    f.center_rotation = c.matrix();
    // c.q / |q| is quasi-concave on the cone, so its minimum is at a vertex.
    double min_cos = 1.0;
    for (int a = 0; a < 4; ++a) min_cos = std::min(min_cos, c.dot(node.vertex(a)));
    f.radius = std::acos(std::clamp(min_cos, -1.0, 1.0));
    return f;
}

PairExtrema cap_extrema_in_frame(const NodeFrame& f, const RotPair& pair) {
    // A member q differs from the center by a rotation of angle <= 2 radius,
    // which moves q o mu2 by at most that angle.
    const double reach = 2.0 * f.radius + 1e-12;
    const double phi = std::acos(std::clamp(pair.mu1.dot(f.center_rotation * pair.mu2), -1.0, 1.0));
    return {z_from_cos(pair, std::cos(std::min(kPi, phi + reach))),
            z_from_cos(pair, std::cos(std::max(0.0, phi - reach)))};
}

PairExtrema extrema_in_frame(const NodeFrame& f, const RotPair& pair, RotExtrema mode) {
    if (mode == RotExtrema::Cap) return cap_extrema_in_frame(f, pair);
    std::array<Vec3, 4> m;
    for (int a = 0; a < 4; ++a) m[a] = f.rotations[a] * pair.mu2;
    const ConeExtremes ce = cone_extremes(m, pair.mu1);
    // The furthest direction from mu1 is the closest one to -mu1.
    return {z_from_cos(pair, ce.min_dot), z_from_cos(pair, ce.max_dot)};
}

double upper_bound_in_frame(const NodeFrame& f, const RotPairTerms& terms, const std::vector<PairExtrema>& ext) {
    Mat4 a = Mat4::Zero();
    double b = 0.0;
    for (std::size_t n = 0; n < terms.pairs.size(); ++n) {
        const RotPair& p = terms.pairs[n];
        const QuadraticChord ch = rot_chord(p, ext[n]);
        const double l2 = ext[n].lower * ext[n].lower;
        // g z^2 + h = (h + g l^2) + g (z^2 - l^2), and on the unit sphere
        // z^2 - l^2 = q^T [(tau1^2 + tau2^2 - l^2) I + 2 tau1 tau2 Xi] q.
        b += ch.h + ch.g * l2;
        if (ch.g != 0.0) {
            a += (2.0 * p.tau1 * p.tau2 * ch.g) * p.xi.matrix();
            a.diagonal().array() += ch.g * (p.tau1 * p.tau1 + p.tau2 * p.tau2 - l2);
        }
    }
    const Mat4 qaq = f.q.transpose() * a * f.q;
    const Mat4& qq = f.gram;

    double best = -std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < 16; ++mask) {
        std::array<int, 4> idx{};
        int dim = 0;
        for (int c = 0; c < 4; ++c) {
            if (mask >> c & 1) idx[dim++] = c;
        }
        Mat4 sa = Mat4::Zero(), sb = Mat4::Zero();
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) {
                sa(r, c) = qaq(idx[r], idx[c]);
                sb(r, c) = qq(idx[r], idx[c]);
            }
        }
        if (dim == 1) {
            best = std::max(best, sa(0, 0) / sb(0, 0));
            continue;
        }
        for (int r = 0; r < dim; ++r) {
            for (int c = r + 1; c < dim; ++c) sa(c, r) = sa(r, c) = 0.5 * (sa(r, c) + sa(c, r));
        }
        EigenDecomposition e;
        try {
            e = gen_eig_pair(sa, sb, dim);
        } catch (const SingularMatrix&) {
            continue;
        }
        for (int c = 0; c < dim; ++c) {
            if (e.values[c] <= best) break;
            const Vec4 v = e.vectors.col(c);
            const double scale = v.head(dim).cwiseAbs().maxCoeff();
            const double tol = 1e-9 * scale;
            const bool nonneg = (v.head(dim).array() >= -tol).all();
            const bool nonpos = (v.head(dim).array() <= tol).all();
            if (nonneg || nonpos) {
                best = e.values[c];
                break;
            }
        }
    }
    if (!std::isfinite(best)) throw InvariantViolation("rotational upper bound: no feasible vertex subset");
    return b + best;
}

}  // namespace

PairExtrema pair_extrema(const TetraNode& node, const RotPair& pair, RotExtrema mode) {
    return extrema_in_frame(frame_of(node), pair, mode);
}

QuadraticChord rot_chord(const RotPair& p, const PairExtrema& ext) {
    const double u = ext.upper;
    const double l = std::min(ext.lower, u);
    const double log_fu = p.log_d + log_f_rot(u);
    const double fu = std::exp(log_fu);
    if (u - l < 1e-9 * (p.tau1 + p.tau2)) return {0.0, fu};
    const double log_fl = p.log_d + log_f_rot(l);
    const double fl = std::exp(log_fl);
    // D (f(u) - f(l)) = D f(u) (1 - e^{log f(l) - log f(u)})
    const double g = fu * -std::expm1(log_fl - log_fu) / ((u - l) * (u + l));
    return {g, fl - g * l * l};
}

double rot_upper_bound(const TetraNode& node, const RotPairTerms& terms, const std::vector<PairExtrema>& extrema) {
    return upper_bound_in_frame(frame_of(node), terms, extrema);
}

RotLowerBound rot_lower_bound(const TetraNode& node, const RotPairTerms& terms) {
    const UnitQuaternion c = node.center();
    return {rot_objective(c, terms), c};
}

RotBbResult rot_bb(const RotPairTerms& terms, const RotBbSettings& settings, const Tessellation& tess) {
    using Entry = BoundedNode<TetraNode, UnitQuaternion>;
    auto evaluate = [&terms, mode = settings.extrema](const TetraNode& node) {
        const NodeFrame f = frame_of(node);
        std::vector<PairExtrema> ext(terms.pairs.size());
        for (std::size_t n = 0; n < terms.pairs.size(); ++n) ext[n] = extrema_in_frame(f, terms.pairs[n], mode);
        const RotLowerBound lb = rot_lower_bound(node, terms);
        Entry e{node, lb.value, upper_bound_in_frame(f, terms, ext), lb.argmax, 0};
        e.upper = std::max(e.upper, e.lower);
        return e;
    };
    auto split = [](const TetraNode& node) { return subdivide(node); };

    BbSettings bs;
    bs.max_depth = settings.max_depth;
    bs.gap_tol = settings.gap_tol;
    bs.prune = settings.prune;
    bs.threads = settings.threads;
    bs.stage = settings.stage;
    auto outcome = branch_and_bound<TetraNode, UnitQuaternion>(tess.hemisphere_cells, evaluate, split, bs);

    RotBbResult res;
    res.best_lower = outcome.best_lower;
    res.best_upper = outcome.best_upper;
    res.trace = std::move(outcome.trace);
    res.nodes_evaluated = outcome.nodes_evaluated;
    res.scale = terms.scale;

    const double dedup =
        settings.dedup_angle_rad >= 0.0 ? settings.dedup_angle_rad : rot_tolerance_for_depth(settings.max_depth);
    res.candidates.push_back({outcome.best, outcome.best_lower, outcome.best_upper});

    auto& frontier = outcome.frontier;
    std::stable_sort(frontier.begin(), frontier.end(),
                     [](const Entry& a, const Entry& b) { return a.lower > b.lower; });
    const double threshold = outcome.best_lower - settings.candidate_slack * std::abs(outcome.best_lower);
    for (const Entry& e : frontier) {
        if (static_cast<int>(res.candidates.size()) >= settings.max_candidates) break;
        if (e.upper < threshold) continue;
        const bool duplicate = std::any_of(res.candidates.begin(), res.candidates.end(), [&](const RotCandidate& c) {
            return rotation_angle(c.q, e.argmax) < dedup;
        });
        if (!duplicate) res.candidates.push_back({e.argmax, e.lower, e.upper});
    }
    return res;
}

}  // namespace bbalign
