#include <doctest.h>

#include <random>

#include "bbalign/knn.hpp"
#include "bbalign/mixtures.hpp"

using namespace bbalign;

TEST_CASE("normals on a plane and a sphere") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> plane;
    for (int i = 0; i < 500; ++i) plane.emplace_back(u(rng), u(rng), 0.0);
    const NormalEstimate p = estimate_normals(plane, 10, Vec3(0, 0, 10));
    CHECK(p.degenerate_count() == 0);
    for (const auto& n : p.normals) CHECK((n - Vec3(0, 0, 1)).norm() < 1e-6);

    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec3> sphere;
    for (int i = 0; i < 2000; ++i) sphere.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
    const NormalEstimate s = estimate_normals(sphere, 10, Vec3::Zero());
    for (std::size_t i = 0; i < sphere.size(); ++i) {
        // Oriented toward the viewpoint at the center: inward.
        CHECK(s.normals[i].dot(-sphere[i]) > std::cos(8.0 * kPi / 180));
    }

    std::vector<Vec3> line;
    for (int i = 0; i < 30; ++i) line.emplace_back(i * 0.1, 0.0, 0.0);
    const NormalEstimate l = estimate_normals(line, 5, Vec3(0, 0, 1));
    CHECK(l.degenerate_count() == line.size());
    CHECK((l.normals[3] - Vec3(0, 0, 1)).norm() == 0.0);
}

TEST_CASE("normal estimation is rotation equivariant") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> pts;
    for (int i = 0; i < 400; ++i) {
        const double x = u(rng), y = u(rng);
        pts.emplace_back(x, y, 0.3 * x * x - 0.2 * y);
    }
    const UnitQuaternion q(0.3, -0.2, 0.5, 0.7);
    const Vec3 view(0.2, 0.1, 5.0);
    std::vector<Vec3> rotated;
    for (const auto& p : pts) rotated.push_back(rotate(q, p));
    const auto a = estimate_normals(pts, 10, view), b = estimate_normals(rotated, 10, rotate(q, view));
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK((rotate(q, a.normals[i]) - b.normals[i]).norm() < 1e-9);
}

TEST_CASE("area weights") {
    std::vector<Vec3> grid;
    for (int x = 0; x < 12; ++x)
        for (int y = 0; y < 12; ++y) grid.emplace_back(0.5 * x, 0.5 * y, 0.0);
    const auto w = point_weights(grid);
    // Interior points (two cells from the border) see the same neighborhood.
    const double ref = w[5 * 12 + 5];
    for (int x = 2; x < 10; ++x)
        for (int y = 2; y < 10; ++y) CHECK(std::abs(w[x * 12 + y] - ref) < 1e-9);

    std::vector<Vec3> doubled;
    for (const auto& p : grid) doubled.push_back(2.0 * p);
    const auto w2 = point_weights(doubled);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w2[i] - 4.0 * w[i]) < 1e-9);

    // Duplicates: brute-force fifth-nearest distance on ten points.
    std::vector<Vec3> dup(6, Vec3(0, 0, 0));
    for (int i = 1; i <= 4; ++i) dup.emplace_back(i, 0, 0);
    const auto wd = point_weights(dup);
    CHECK(wd[0] == 0.0);
    for (std::size_t i = 0; i < dup.size(); ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < dup.size(); ++j)
            if (j != i) d.push_back((dup[j] - dup[i]).squaredNorm());
        std::sort(d.begin(), d.end());
        CHECK(wd[i] == doctest::Approx(d[4]));
    }
}

TEST_CASE("DP-vMF-means") {
    const std::vector<double> w6(6, 1.0);
    const std::vector<Vec3> axes{Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
    const Clustering c = dp_vmf_means(axes, w6, 45.0);
    CHECK(c.means.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK((c.means[c.labels[i]] - axes[i]).norm() < 1e-12);

    const std::vector<Vec3> same(10, Vec3(0, 0.6, 0.8));
    CHECK(dp_vmf_means(same, std::vector<double>(10, 1.0), 10.0).means.size() == 1);
    CHECK(dp_vmf_means(same, std::vector<double>(10, 1.0), 170.0).means.size() == 1);

    // Two antipodal bundles: 60 deg keeps them apart.
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<Vec3> bundles;
    for (int i = 0; i < 40; ++i) {
        const Vec3 n = Vec3(g(rng), g(rng), 1.0).normalized();
        bundles.push_back(i % 2 ? n : -n);
    }
    CHECK(dp_vmf_means(bundles, std::vector<double>(40, 1.0), 60.0).means.size() == 2);
}

TEST_CASE("DP-means") {
    const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(10, 0, 0)};
    const std::vector<double> w2{1.0, 1.0};
    CHECK(dp_means(two, w2, 1.0).means.size() == 2);
    const Clustering one = dp_means(two, w2, 20.0);
    REQUIRE(one.means.size() == 1);
    CHECK((one.means[0] - Vec3(5, 0, 0)).norm() < 1e-12);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.1);
    const std::vector<Vec3> centers{Vec3(0, 0, 0), Vec3(20, 0, 0), Vec3(0, 20, 5)};
    std::vector<Vec3> pts;
    for (int i = 0; i < 300; ++i) pts.push_back(centers[i % 3] + Vec3(g(rng), g(rng), g(rng)));
    const std::vector<double> w(pts.size(), 1.0);
    const Clustering c = dp_means(pts, w, 3.0);
    REQUIRE(c.means.size() == 3);
    for (int k = 0; k < 3; ++k) {
        Vec3 centroid = Vec3::Zero();
        int n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (c.labels[i] == k) {
                centroid += pts[i];
                ++n;
            }
        }
        CHECK((centroid / n - c.means[k]).norm() < 1e-6);
    }
}

TEST_CASE("clustering objectives decrease each iteration") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> uw(0.5, 2.0);
    std::vector<Vec3> pts, nor;
    std::vector<double> w;
    for (int i = 0; i < 600; ++i) {
        pts.emplace_back(3 * g(rng), 3 * g(rng), g(rng));
        nor.push_back(Vec3(g(rng), g(rng), 2 * g(rng)).normalized());
        w.push_back(uw(rng));
    }
    for (const Clustering& c : {dp_means(pts, w, 2.5), dp_vmf_means(nor, w, 40.0)}) {
        CHECK(c.iterations >= 1);
        for (std::size_t i = 1; i < c.objective_trace.size(); ++i)
            CHECK(c.objective_trace[i] <= c.objective_trace[i - 1] + 1e-12);
    }
}

TEST_CASE("vMF mixture fitting") {
    const std::vector<Vec3> same(5, Vec3(0, 0, 1));
    const std::vector<int> zero(5, 0);
    const VmfMixture m = fit_vmf_mixture(same, std::vector<double>(5, 1.0), zero);
    REQUIRE(m.size() == 1);
    CHECK(m[0].tau == kTauMax);
    CHECK((m[0].mean - Vec3(0, 0, 1)).norm() < 1e-15);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec3> uni;
    for (int i = 0; i < 10000; ++i) uni.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
    const VmfMixture mu = fit_vmf_mixture(uni, std::vector<double>(uni.size(), 1.0), std::vector<int>(uni.size(), 0));
    CHECK(mu[0].tau < 0.2);
    CHECK(mu[0].tau >= kTauMin);

    const std::vector<Vec3> two{Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitY()};
    const VmfMixture mw = fit_vmf_mixture(two, std::vector<double>{1.0, 2.0, 1.0}, std::vector<int>{0, 0, 1});
    CHECK(mw[0].weight == doctest::Approx(0.75));
    CHECK(mw[1].weight == doctest::Approx(0.25));
}

TEST_CASE("Gaussian mixture fitting") {
    const std::vector<Vec3> same(4, Vec3(1, 2, 3));
    const GaussMixture m = fit_gauss_mixture(same, std::vector<double>(4, 1.0), std::vector<int>(4, 0), 1e-4);
    CHECK((m[0].cov - 1e-4 * Mat3::Identity()).norm() < 1e-15);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec3> pts;
    for (int i = 0; i < 10000; ++i) pts.emplace_back(g(rng), 2 * g(rng), 3 * g(rng));
    const std::vector<int> labels(pts.size(), 0);
    const GaussMixture a = fit_gauss_mixture(pts, std::vector<double>(pts.size(), 1.0), labels, 1e-6);
    CHECK(std::abs(a[0].cov(0, 0) - 1.0) < 0.05);
    CHECK(std::abs(a[0].cov(1, 1) - 4.0) < 0.2);
    CHECK(std::abs(a[0].cov(2, 2) - 9.0) < 0.45);
    const GaussMixture b = fit_gauss_mixture(pts, std::vector<double>(pts.size(), 2.0), labels, 1e-6);
    CHECK((a[0].cov - b[0].cov).norm() < 1e-12);
    CHECK((a[0].mean - b[0].mean).norm() < 1e-12);
    CHECK(a[0].weight == doctest::Approx(1.0));
}
