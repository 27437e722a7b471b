#include "bbalign/mixtures.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bbalign/errors.hpp"
#include "bbalign/knn.hpp"

namespace bbalign {

std::size_t NormalEstimate::degenerate_count() const {
    return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

NormalEstimate estimate_normals(std::span<const Vec3> points, std::size_t k, const Vec3& viewpoint) {
    if (k < 3 || points.size() <= k) {
        throw std::invalid_argument("estimate_normals requires points.size() > k >= 3");
    }
    const KnnIndex index(points);
    NormalEstimate out;
    out.normals.resize(points.size());
    out.degenerate.assign(points.size(), false);

    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<std::size_t> nbrs = index.neighbors(i, k);
        nbrs.push_back(i);
        Vec3 mean = Vec3::Zero();
        for (std::size_t n : nbrs) mean += points[n];
        mean /= static_cast<double>(nbrs.size());
        Mat3 cov = Mat3::Zero();
        for (std::size_t n : nbrs) {
            const Vec3 d = points[n] - mean;
            cov += d * d.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 ev = eig.eigenvalues();  // ascending
        if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
            out.normals[i] = Vec3::UnitZ();
            out.degenerate[i] = true;
            continue;
        }
        Vec3 n = eig.eigenvectors().col(0).normalized();
        if ((viewpoint - points[i]).dot(n) < 0.0) n = -n;
        out.normals[i] = n;
    }
    return out;
}

std::vector<double> point_weights(std::span<const Vec3> points) {
    if (points.size() < 6) throw std::invalid_argument("point_weights requires at least 6 points");
    const KnnIndex index(points);
    std::vector<double> w(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto nbrs = index.neighbors(i, 5);
        w[i] = (points[nbrs.back()] - points[i]).squaredNorm();
    }
    return w;
}

namespace {

// Small-variance DP hard clustering shared by the spherical and Euclidean
// variants. Objective: sum_i w_i cost(x_i, mu_{l_i}) + wbar * penalty * K,
// with wbar the mean weight. Points are visited in input order.
template <class Cost, class Mean>
Clustering dp_cluster(std::span<const Vec3> x, std::span<const double> w, double penalty, int max_iterations,
                      Cost cost, Mean mean_of) {
    const std::size_t n = x.size();
    if (w.size() != n) throw std::invalid_argument("weights and data differ in length");
    Clustering out;
    if (n == 0) return out;
    const double wbar = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
    const double spawn_cost = wbar * penalty;

    std::vector<int> labels(n, -1);
    std::vector<Vec3> means;
    auto objective = [&]() {
        double j = spawn_cost * static_cast<double>(means.size());
        for (std::size_t i = 0; i < n; ++i) j += w[i] * cost(x[i], means[labels[i]]);
        return j;
    };

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        std::vector<std::size_t> counts(means.size(), 0);
        for (int l : labels) {
            if (l >= 0) ++counts[l];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int current = labels[i];
            int best = -1;
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < means.size(); ++k) {
                if (counts[k] == 0 && static_cast<int>(k) != current) continue;  // dead cluster
                const double c = w[i] * cost(x[i], means[k]);
                if (c < best_cost) {
                    best_cost = c;
                    best = static_cast<int>(k);
                }
            }
            if (current >= 0) {
                const double stay = w[i] * cost(x[i], means[current]);
                if (!(best_cost < stay)) {
                    best = current;
                    best_cost = stay;
                }
            }
            if (best < 0 || best_cost > spawn_cost) {
                means.push_back(x[i]);
                counts.push_back(0);
                best = static_cast<int>(means.size()) - 1;
            }
            if (best != current) {
                if (current >= 0) --counts[current];
                ++counts[best];
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        // Drop empty clusters, keep order, then re-estimate means.
        std::vector<int> remap(means.size(), -1);
        std::vector<Vec3> kept;
        for (std::size_t k = 0; k < means.size(); ++k) {
            if (counts[k] > 0) {
                remap[k] = static_cast<int>(kept.size());
                kept.push_back(means[k]);
            }
        }
        for (int& l : labels) l = remap[l];
        means = std::move(kept);
        for (std::size_t k = 0; k < means.size(); ++k) means[k] = mean_of(static_cast<int>(k), labels, means[k]);

        out.iterations = iter + 1;
        out.objective_trace.push_back(objective());
        if (!changed) break;
    }
    out.labels = std::move(labels);
    out.means = std::move(means);
    return out;
}

}  // namespace

Clustering dp_vmf_means(std::span<const Vec3> normals, std::span<const double> weights, double lambda_deg,
                        int max_iterations) {
    if (!(lambda_deg > 0.0 && lambda_deg < 180.0)) throw std::invalid_argument("lambda_deg must lie in (0, 180)");
    const double penalty = 1.0 - std::cos(deg_to_rad(lambda_deg));
    auto cost = [](const Vec3& n, const Vec3& mu) { return 1.0 - mu.dot(n); };
    auto mean_of = [&](int k, const std::vector<int>& labels, const Vec3& previous) {
        Vec3 s = Vec3::Zero(), plain = Vec3::Zero();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != k) continue;
            s += weights[i] * normals[i];
            plain += normals[i];
        }
        if (s.norm() > 1e-300) return Vec3(s.normalized());
        if (plain.norm() > 1e-300) return Vec3(plain.normalized());
        return previous;
    };
    return dp_cluster(normals, weights, penalty, max_iterations, cost, mean_of);
}

Clustering dp_means(std::span<const Vec3> points, std::span<const double> weights, double lambda_len,
                    int max_iterations) {
    if (!(lambda_len > 0.0)) throw std::invalid_argument("lambda_len must be positive");
    auto cost = [](const Vec3& p, const Vec3& mu) { return (p - mu).squaredNorm(); };
    auto mean_of = [&](int k, const std::vector<int>& labels, const Vec3& previous) {
        Vec3 s = Vec3::Zero(), plain = Vec3::Zero();
        double ws = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != k) continue;
            s += weights[i] * points[i];
            ws += weights[i];
            plain += points[i];
            ++count;
        }
        if (ws > 0.0) return Vec3(s / ws);
        if (count > 0) return Vec3(plain / static_cast<double>(count));
        return previous;
    };
    return dp_cluster(points, weights, lambda_len * lambda_len, max_iterations, cost, mean_of);
}

namespace {

int cluster_count(std::span<const int> labels) {
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("negative cluster label");
        k = std::max(k, l + 1);
    }
    return k;
}

// Cluster weights; falls back to counts when a cluster carries no weight.
std::vector<double> effective_weights(std::span<const double> weights, std::span<const int> labels, int k,
                                      std::vector<double>& mass) {
    mass.assign(k, 0.0);
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        mass[labels[i]] += weights[i];
        count[labels[i]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
        if (count[c] == 0.0) throw std::invalid_argument("empty cluster");
    }
    std::vector<double> w(weights.begin(), weights.end());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mass[labels[i]] <= 0.0) w[i] = 1.0;
    }
    return w;
}

}  // namespace

VmfMixture fit_vmf_mixture(std::span<const Vec3> normals, std::span<const double> weights,
                           std::span<const int> labels) {
    const int k = cluster_count(labels);
    std::vector<double> mass;
    const std::vector<double> w = effective_weights(weights, labels, k, mass);

    std::vector<Vec3> sum(k, Vec3::Zero());
    std::vector<double> wsum(k, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        sum[labels[i]] += w[i] * normals[i];
        wsum[labels[i]] += w[i];
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    VmfMixture mix(k);
    for (int c = 0; c < k; ++c) {
        const double rbar = std::min(1.0, sum[c].norm() / wsum[c]);
        double tau = kTauMax;
        if (rbar < 1.0 - 1e-12) tau = rbar * (3.0 - rbar * rbar) / (1.0 - rbar * rbar);
        mix[c].tau = std::clamp(tau, kTauMin, kTauMax);
        mix[c].mean = sum[c].norm() > 0.0 ? Vec3(sum[c].normalized()) : Vec3::UnitZ();
        mix[c].weight = total > 0.0 ? mass[c] / total : 1.0 / k;
    }
    return mix;
}

GaussMixture fit_gauss_mixture(std::span<const Vec3> points, std::span<const double> weights,
                               std::span<const int> labels, double sigma2_floor) {
    const int k = cluster_count(labels);
    std::vector<double> mass;
    const std::vector<double> w = effective_weights(weights, labels, k, mass);

    std::vector<Vec3> mean(k, Vec3::Zero());
    std::vector<double> wsum(k, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        mean[labels[i]] += w[i] * points[i];
        wsum[labels[i]] += w[i];
    }
    for (int c = 0; c < k; ++c) mean[c] /= wsum[c];
    std::vector<Mat3> cov(k, Mat3::Zero());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Vec3 d = points[i] - mean[labels[i]];
        cov[labels[i]] += w[i] * d * d.transpose();
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    GaussMixture mix(k);
    for (int c = 0; c < k; ++c) {
        Mat3 s = cov[c] / wsum[c];
        s = 0.5 * (s + s.transpose()).eval();
        mix[c].mean = mean[c];
        mix[c].cov = s + sigma2_floor * Mat3::Identity();
        mix[c].weight = total > 0.0 ? mass[c] / total : 1.0 / k;
    }
    return mix;
}

}  // namespace bbalign
