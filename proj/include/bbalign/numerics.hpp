#ifndef BBALIGN_NUMERICS_HPP
#define BBALIGN_NUMERICS_HPP

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <numbers>

namespace bbalign {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Unit quaternion stored as (i, j, k, r); r is the scalar part.
/// The "north" reference (0, 0, 0, 1) is the identity rotation.
struct UnitQuaternion {
    double i = 0.0;
    double j = 0.0;
    double k = 0.0;
    double r = 1.0;

    UnitQuaternion() = default;
    /// Normalizes the input; throws InvariantViolation on a zero vector.
    UnitQuaternion(double qi, double qj, double qk, double qr);
    explicit UnitQuaternion(const Vec4& v) : UnitQuaternion(v[0], v[1], v[2], v[3]) {}

    static UnitQuaternion identity() { return {}; }
    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);
    static UnitQuaternion from_matrix(const Mat3& rotation);

    Vec4 vec() const { return {i, j, k, r}; }
    double dot(const UnitQuaternion& o) const { return i * o.i + j * o.j + k * o.k + r * o.r; }
    UnitQuaternion conjugate() const;
    UnitQuaternion operator-() const;
    Mat3 matrix() const;
};

/// Hamilton product: (a * b) rotates by b first, then by a.
UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);

Vec3 rotate(const UnitQuaternion& q, const Vec3& v);

/// Rotation angle (radians, in [0, pi]) between the rotations a and b.
double rotation_angle(const UnitQuaternion& a, const UnitQuaternion& b);

/// Symmetric 4x4 matrix. Only the upper triangle of the input is read; the
/// stored matrix is its exact mirror.
class SymMat4 {
public:
    SymMat4() : m_(Mat4::Zero()) {}
    explicit SymMat4(const Mat4& upper);

    const Mat4& matrix() const { return m_; }
    double operator()(int row, int col) const { return m_(row, col); }
    double quadratic_form(const Vec4& q) const { return q.dot(m_ * q); }

private:
    Mat4 m_;
};

/// Xi(u, v) with q^T Xi q = u^T (q o v) for every unit quaternion q.
SymMat4 xi_matrix(const Vec3& u, const Vec3& v);

/// Eigen-decomposition of the leading dim x dim block; values sorted descending,
/// column c of `vectors` belongs to values[c]. Entries beyond dim are zero.
struct EigenDecomposition {
    int dim = 0;
    Vec4 values = Vec4::Zero();
    Mat4 vectors = Mat4::Zero();
};

/// Cyclic Jacobi on a symmetric block (sweep tolerance 1e-13, at most 50 sweeps).
EigenDecomposition sym_eig(const Mat4& a, int dim);

/// A v = lambda B v on the leading dim x dim block via Cholesky reduction.
/// Throws SingularMatrix when a pivot falls below 1e-12 * trace(B).
EigenDecomposition gen_eig_pair(const Mat4& a, const Mat4& b, int dim);

/// f(z) = 2 sinh(z) / z, continuous at 0 with f(0) = 2.
double f_rot(double z);
/// log f(z), stable for large z.
double log_f_rot(double z);

/// log of the vMF normalizer on S^2, C(tau) = tau / (4 pi sinh tau).
double log_vmf_const(double tau);

/// log(exp(a) - exp(b)) for a >= b; -inf when a == b.
double log_diff_exp(double a, double b);

/// A single scale exp(-log_factor) shared by every objective value of one problem.
struct LogScale {
    double log_factor = 0.0;

    double scaled(double log_value) const { return std::exp(log_value - log_factor); }
    double unscaled_log(double scaled_value) const { return std::log(scaled_value) + log_factor; }
};

constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace bbalign

#endif  // BBALIGN_NUMERICS_HPP
