#ifndef BBALIGN_BOX_QP_HPP
#define BBALIGN_BOX_QP_HPP

#include "bbalign/numerics.hpp"
#include "bbalign/tess_r3.hpp"

namespace bbalign {

struct BoxQpResult {
    double value = 0.0;
    Vec3 argmax = Vec3::Zero();
};

/// Exact maximum of t^T A t + B^T t + C over the box for negative semidefinite A.
/// Every stratum (free/lower/upper per axis) is solved for its stationary
/// point; the best feasible one is the maximum by concavity. Singular blocks
/// use the minimum-norm stationary point.
BoxQpResult max_quadratic_over_box(const Mat3& a, const Vec3& b, double c, const BoxNode& box);

}  // namespace bbalign

#endif  // BBALIGN_BOX_QP_HPP
