#include "bbalign/box_qp.hpp"

#include <Eigen/Dense>
#include <limits>

namespace bbalign {

namespace {

double quad_value(const Mat3& a, const Vec3& b, double c, const Vec3& t) { return t.dot(a * t) + b.dot(t) + c; }

// Stationary point of the leading n x n block: 2 A x = -b.
template <int N>
Eigen::Matrix<double, N, 1> stationary(const Eigen::Matrix<double, N, N>& a, const Eigen::Matrix<double, N, 1>& b,
                                       double scale, bool& ok) {
    Eigen::LDLT<Eigen::Matrix<double, N, N>> ldlt(-2.0 * a);
    const auto d = ldlt.vectorD();
    ok = ldlt.info() == Eigen::Success && (d.array() > 1e-12 * scale).all();
    if (ok) return ldlt.solve(b);
    Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<double, N, N>> cod(-2.0 * a);
    cod.setThreshold(1e-12);
    const Eigen::Matrix<double, N, 1> x = cod.solve(b);
    ok = ((-2.0 * a) * x - b).norm() <= 1e-9 * (1.0 + b.norm());
    return x;
}

}  // namespace

BoxQpResult max_quadratic_over_box(const Mat3& a, const Vec3& b, double c, const BoxNode& box) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    BoxQpResult best{-std::numeric_limits<double>::infinity(), box.center()};

    // Concavity: an interior stationary point is the global maximum.
    {
        bool ok = false;
        const Vec3 t = stationary<3>(a, b, scale, ok);
        if (ok && box.contains(t)) return {quad_value(a, b, c, t), t};
    }

    // Strata: state per axis 0 = free, 1 = lo, 2 = hi.
    for (int code = 1; code < 27; ++code) {
        int state[3] = {code % 3, code / 3 % 3, code / 9};
        int free_idx[3];
        int nfree = 0;
        Vec3 t = Vec3::Zero();
        for (int ax = 0; ax < 3; ++ax) {
            if (state[ax] == 0) {
                free_idx[nfree++] = ax;
            } else {
                t[ax] = state[ax] == 1 ? box.lo[ax] : box.hi[ax];
            }
        }
        if (nfree > 0) {
            // Gradient of the free part: 2 A_ff x + (B_f + 2 A_f,fixed t_fixed).
            bool ok = false;
            if (nfree == 1) {
                const int f = free_idx[0];
                double lin = b[f];
                for (int ax = 0; ax < 3; ++ax) {
                    if (ax != f) lin += 2.0 * a(f, ax) * t[ax];
                }
                const double aff = a(f, f);
                if (-2.0 * aff > 1e-12 * scale) {
                    t[f] = lin / (-2.0 * aff);
                    ok = true;
                } else {
                    ok = std::abs(lin) <= 1e-12 * (1.0 + std::abs(b[f]));
                    t[f] = std::clamp(0.0, box.lo[f], box.hi[f]);
                }
            } else {
                Eigen::Matrix2d aff;
                Eigen::Vector2d lin;
                for (int r = 0; r < 2; ++r) {
                    lin[r] = b[free_idx[r]];
                    for (int cc = 0; cc < 2; ++cc) aff(r, cc) = a(free_idx[r], free_idx[cc]);
                    for (int ax = 0; ax < 3; ++ax) {
                        if (state[ax] != 0) lin[r] += 2.0 * a(free_idx[r], ax) * t[ax];
                    }
                }
                const Eigen::Vector2d x = stationary<2>(aff, lin, scale, ok);
                t[free_idx[0]] = x[0];
                t[free_idx[1]] = x[1];
            }
            if (!ok) continue;
            bool inside = true;
            for (int r = 0; r < nfree; ++r) {
                const int f = free_idx[r];
                if (t[f] < box.lo[f] || t[f] > box.hi[f]) inside = false;
            }
            if (!inside) continue;
        }
        const double v = quad_value(a, b, c, t);
        if (v > best.value) best = {v, t};
    }
    return best;
}

}  // namespace bbalign
