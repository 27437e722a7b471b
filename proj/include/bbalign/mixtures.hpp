#ifndef BBALIGN_MIXTURES_HPP
#define BBALIGN_MIXTURES_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "bbalign/numerics.hpp"

namespace bbalign {

struct WeightedCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;   // empty until estimated or read from file
    std::vector<double> weights; // empty until computed

    bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

struct VmfComponent {
    Vec3 mean;
    double tau;
    double weight;
};

struct GaussComponent {
    Vec3 mean;
    Mat3 cov;
    double weight;
};

using VmfMixture = std::vector<VmfComponent>;
using GaussMixture = std::vector<GaussComponent>;

constexpr double kTauMin = 1e-2;
constexpr double kTauMax = 1e3;

struct NormalEstimate {
    std::vector<Vec3> normals;
    /// Neighborhood without a well-defined plane; the normal was set to +z.
    std::vector<bool> degenerate;

    std::size_t degenerate_count() const;
};

/// kNN + PCA normals oriented so that (viewpoint - p_i) . n_i >= 0.
/// Requires points.size() > k >= 3.
NormalEstimate estimate_normals(std::span<const Vec3> points, std::size_t k, const Vec3& viewpoint);

/// Per-point surface-area weight: squared distance to the fifth nearest neighbor.
std::vector<double> point_weights(std::span<const Vec3> points);

struct Clustering {
    std::vector<int> labels;
    std::vector<Vec3> means;
    int iterations = 0;
    /// Objective after each full iteration (assignment pass + mean update).
    std::vector<double> objective_trace;
};

/// DP-vMF-means hard clustering on unit normals with angular scale lambda_deg.
Clustering dp_vmf_means(std::span<const Vec3> normals, std::span<const double> weights, double lambda_deg,
                        int max_iterations = 100);

/// DP-means hard clustering on points with metric scale lambda_len.
Clustering dp_means(std::span<const Vec3> points, std::span<const double> weights, double lambda_len,
                    int max_iterations = 100);

/// Maximum-likelihood vMF per cluster; concentrations clamped to [kTauMin, kTauMax].
VmfMixture fit_vmf_mixture(std::span<const Vec3> normals, std::span<const double> weights,
                           std::span<const int> labels);

/// Weighted mean and covariance per cluster, regularized by sigma2_floor * I.
GaussMixture fit_gauss_mixture(std::span<const Vec3> points, std::span<const double> weights,
                               std::span<const int> labels, double sigma2_floor);

}  // namespace bbalign

#endif  // BBALIGN_MIXTURES_HPP
