#include "bbalign/numerics.hpp"

#include <algorithm>
#include <limits>

#include "bbalign/errors.hpp"

namespace bbalign {

UnitQuaternion::UnitQuaternion(double qi, double qj, double qk, double qr) {
    const double n = std::sqrt(qi * qi + qj * qj + qk * qk + qr * qr);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvariantViolation("cannot normalize a zero or non-finite quaternion");
    }
    i = qi / n;
    j = qj / n;
    k = qk / n;
    r = qr / n;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
    const Vec3 a = axis.normalized();
    const double s = std::sin(0.5 * angle_rad);
    return {a.x() * s, a.y() * s, a.z() * s, std::cos(0.5 * angle_rad)};
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& m) {
    // Shepperd's method: branch on the largest diagonal combination.
    const double trace = m.trace();
    if (trace > m(0, 0) && trace > m(1, 1) && trace > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        return {(m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s, 0.25 * s};
    }
    if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        return {0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s, (m(2, 1) - m(1, 2)) / s};
    }
    if (m(1, 1) >= m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
        return {(m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s, (m(0, 2) - m(2, 0)) / s};
    }
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    return {(m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s, (m(1, 0) - m(0, 1)) / s};
}

UnitQuaternion UnitQuaternion::conjugate() const {
    UnitQuaternion q;
    q.i = -i;
    q.j = -j;
    q.k = -k;
    q.r = r;
    return q;
}

UnitQuaternion UnitQuaternion::operator-() const {
    UnitQuaternion q;
    q.i = -i;
    q.j = -j;
    q.k = -k;
    q.r = -r;
    return q;
}

Mat3 UnitQuaternion::matrix() const {
    Mat3 m;
    m << 1 - 2 * j * j - 2 * k * k, 2 * (i * j - k * r), 2 * (i * k + j * r),
         2 * (i * j + k * r), 1 - 2 * i * i - 2 * k * k, 2 * (j * k - i * r),
         2 * (i * k - j * r), 2 * (j * k + i * r), 1 - 2 * i * i - 2 * j * j;
    return m;
}

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
    return {a.r * b.i + a.i * b.r + a.j * b.k - a.k * b.j,
            a.r * b.j - a.i * b.k + a.j * b.r + a.k * b.i,
            a.r * b.k + a.i * b.j - a.j * b.i + a.k * b.r,
            a.r * b.r - a.i * b.i - a.j * b.j - a.k * b.k};
}

Vec3 rotate(const UnitQuaternion& q, const Vec3& v) {
    const double n2 = q.i * q.i + q.j * q.j + q.k * q.k + q.r * q.r;
    if (std::abs(n2 - 1.0) > 1e-9) {
        return UnitQuaternion(q.i, q.j, q.k, q.r).matrix() * v;
    }
    return q.matrix() * v;
}

double rotation_angle(const UnitQuaternion& a, const UnitQuaternion& b) {
    const double d = std::min(1.0, std::abs(a.dot(b)));
    return 2.0 * std::acos(d);
}

SymMat4::SymMat4(const Mat4& upper) {
    for (int r = 0; r < 4; ++r) {
        for (int c = r; c < 4; ++c) {
            m_(r, c) = upper(r, c);
            m_(c, r) = upper(r, c);
        }
    }
}

SymMat4 xi_matrix(const Vec3& u, const Vec3& v) {
    const double ui = u.x(), uj = u.y(), uk = u.z();
    const double vi = v.x(), vj = v.y(), vk = v.z();
    Mat4 x;
    x << ui * vi - uj * vj - uk * vk, uj * vi + ui * vj, ui * vk + uk * vi, uk * vj - uj * vk,
         0, uj * vj - ui * vi - uk * vk, uj * vk + uk * vj, ui * vk - uk * vi,
         0, 0, uk * vk - ui * vi - uj * vj, uj * vi - ui * vj,
         0, 0, 0, u.dot(v);
    return SymMat4(x);
}

namespace {

void sort_descending(EigenDecomposition& e) {
    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.begin() + e.dim,
                     [&](int a, int b) { return e.values[a] > e.values[b]; });
    EigenDecomposition sorted;
    sorted.dim = e.dim;
    for (int c = 0; c < e.dim; ++c) {
        sorted.values[c] = e.values[order[c]];
        sorted.vectors.col(c) = e.vectors.col(order[c]);
    }
    e = sorted;
}

}  // namespace

EigenDecomposition sym_eig(const Mat4& input, int dim) {
    EigenDecomposition out;
    out.dim = dim;
    Mat4 a = Mat4::Zero();
    a.topLeftCorner(dim, dim) = input.topLeftCorner(dim, dim);
    Mat4 v = Mat4::Zero();
    v.topLeftCorner(dim, dim).setIdentity();

    const double scale = std::max(a.topLeftCorner(dim, dim).cwiseAbs().maxCoeff(),
                                  std::numeric_limits<double>::min());
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < dim; ++p) {
            for (int q = p + 1; q < dim; ++q) off += a(p, q) * a(p, q);
        }
        if (std::sqrt(off) <= 1e-13 * scale) break;

        for (int p = 0; p < dim; ++p) {
            for (int q = p + 1; q < dim; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < dim; ++r) {
                    const double arp = a(r, p), arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(r, q) = s * arp + c * arq;
                }
                for (int r = 0; r < dim; ++r) {
                    const double apr = a(p, r), aqr = a(q, r);
                    a(p, r) = c * apr - s * aqr;
                    a(q, r) = s * apr + c * aqr;
                }
                for (int r = 0; r < dim; ++r) {
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }
    for (int c = 0; c < dim; ++c) out.values[c] = a(c, c);
    out.vectors = v;
    sort_descending(out);
    return out;
}

EigenDecomposition gen_eig_pair(const Mat4& a, const Mat4& b, int dim) {
    const double trace = b.topLeftCorner(dim, dim).trace();
    Mat4 l = Mat4::Zero();
    for (int c = 0; c < dim; ++c) {
        double d = b(c, c);
        for (int k = 0; k < c; ++k) d -= l(c, k) * l(c, k);
        if (!(d > 1e-12 * trace)) {
            throw SingularMatrix("generalized eigenproblem: B is not positive definite");
        }
        l(c, c) = std::sqrt(d);
        for (int r = c + 1; r < dim; ++r) {
            double s = b(r, c);
            for (int k = 0; k < c; ++k) s -= l(r, k) * l(c, k);
            l(r, c) = s / l(c, c);
        }
    }
    // C = L^-1 A L^-T by forward substitution on columns, then on rows.
    Mat4 y = Mat4::Zero();
    for (int col = 0; col < dim; ++col) {
        for (int r = 0; r < dim; ++r) {
            double s = a(r, col);
            for (int k = 0; k < r; ++k) s -= l(r, k) * y(k, col);
            y(r, col) = s / l(r, r);
        }
    }
    Mat4 c = Mat4::Zero();
    for (int row = 0; row < dim; ++row) {
        for (int r = 0; r < dim; ++r) {
            double s = y(row, r);
            for (int k = 0; k < r; ++k) s -= l(r, k) * c(row, k);
            c(row, r) = s / l(r, r);
        }
    }
    for (int r = 0; r < dim; ++r) {
        for (int col = r + 1; col < dim; ++col) {
            const double m = 0.5 * (c(r, col) + c(col, r));
            c(r, col) = m;
            c(col, r) = m;
        }
    }
    EigenDecomposition e = sym_eig(c, dim);
    // v = L^-T w, back substitution.
    for (int col = 0; col < dim; ++col) {
        Vec4 w = e.vectors.col(col);
        for (int r = dim - 1; r >= 0; --r) {
            double s = w[r];
            for (int k = r + 1; k < dim; ++k) s -= l(k, r) * w[k];
            w[r] = s / l(r, r);
        }
        e.vectors.col(col) = w;
    }
    return e;
}

double f_rot(double z) {
    if (z < 1e-4) {
        const double z2 = z * z;
        return 2.0 * (1.0 + z2 / 6.0 + z2 * z2 / 120.0);
    }
    if (z < 20.0) return 2.0 * std::sinh(z) / z;
    return std::exp(log_f_rot(z));
}

double log_f_rot(double z) {
    if (z < 1e-4) {
        const double z2 = z * z;
        return std::log(2.0) + std::log1p(z2 / 6.0 + z2 * z2 / 120.0);
    }
    return z + std::log1p(-std::exp(-2.0 * z)) - std::log(z);
}

double log_vmf_const(double tau) {
    const double log4pi = std::log(4.0 * kPi);
    if (tau < 1e-4) {
        const double t2 = tau * tau;
        return -log4pi - std::log1p(t2 / 6.0 + t2 * t2 / 120.0);
    }
    // log sinh(tau) = tau + log((1 - e^{-2 tau}) / 2)
    return std::log(tau) - log4pi - tau - std::log1p(-std::exp(-2.0 * tau)) + std::log(2.0);
}

double log_diff_exp(double a, double b) {
    if (b > a) b = a;
    if (a == b) return -std::numeric_limits<double>::infinity();
    return a + std::log1p(-std::exp(b - a));
}

}  // namespace bbalign
