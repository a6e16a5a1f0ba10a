#include <doctest.h>

#include <random>

#include "ganens/errors.hpp"
#include "ganens/metric_kernel.hpp"
#include "support/oracles.hpp"

using namespace ganens;

namespace {

EmbeddingSet line(std::initializer_list<float> xs, std::string id = "line") {
    std::vector<std::vector<float>> rows;
    for (float x : xs) rows.push_back({x});
    return oracle::from_rows(rows, std::move(id));
}

GaussianSummary scalar_gaussian(double mean, double var) {
    GaussianSummary g;
    g.mean = Eigen::VectorXd::Constant(1, mean);
    g.covariance = Eigen::MatrixXd::Constant(1, 1, var);
    return g;
}

/// Points on a 1/8 grid so that translations by integers are exact in f32.
EmbeddingSet dyadic_set(std::mt19937& gen, std::size_t rows, std::size_t dim, float shift = 0.0f) {
    std::uniform_int_distribution<int> u(-64, 64);
    std::vector<float> data(rows * dim);
    for (auto& v : data) v = static_cast<float>(u(gen)) / 8.0f + shift;
    return EmbeddingSet::create(rows, dim, std::move(data), "grid");
}

EmbeddingSet shifted(const EmbeddingSet& s, const std::vector<float>& by) {
    std::vector<float> data(s.data().begin(), s.data().end());
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t j = 0; j < s.dim(); ++j) data[i * s.dim() + j] += by[j];
    }
    return EmbeddingSet::create(s.rows(), s.dim(), std::move(data), s.source_id());
}

}  // namespace

TEST_SUITE("metric_kernel") {

TEST_CASE("knn radii of {0,1,3} at k=1 are [1,1,2]") {
    const auto r = knn_radii(line({0, 1, 3}), 1);
    CHECK(r.radii == std::vector<double>{1.0, 1.0, 2.0});
    CHECK(r.k == 1);
}

TEST_CASE("knn radii: duplicates give zero radius; k >= N is rejected") {
    const auto r = knn_radii(line({2, 2}), 1);
    CHECK(r.radii == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(knn_radii(line({0, 1, 3}), 3), ParameterError);
    CHECK_THROWS_AS(knn_radii(line({0, 1, 3}), 0), ParameterError);
}

TEST_CASE("density examples") {
    const auto ref = line({0, 1});
    CHECK(density(ref, line({0.1f}), 1) == 2.0);
    CHECK(density(ref, ref, 1) == 2.0);
    CHECK(density(ref, line({100}), 1) == 0.0);
}

TEST_CASE("coverage examples") {
    const auto ref = line({0, 1});
    CHECK(coverage(ref, ref, 1) == 1.0);
    CHECK(coverage(ref, line({0.1f}), 1) == 1.0);
    CHECK(coverage(ref, line({5}), 1) == 0.0);
}

TEST_CASE("harmonic_d") {
    CHECK(harmonic_d(0.37, 0.37) == doctest::Approx(0.37).epsilon(1e-15));
    CHECK(harmonic_d(0.0, 1.0) == 0.0);
    CHECK(harmonic_d(0.0, 0.0) == 0.0);
    CHECK(harmonic_d(0.886, 1.0) == doctest::Approx(0.9395546129374337).epsilon(1e-14));
    CHECK_THROWS_AS(harmonic_d(-0.1, 0.5), ParameterError);
    CHECK_THROWS_AS(harmonic_d(0.1, -0.5), ParameterError);
}

TEST_CASE("property: harmonic_d is bounded by twice the smaller input and fixes equal inputs") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const double a = u(gen), b = u(gen);
        const double h = harmonic_d(a, b);
        CHECK(h <= 2.0 * std::min(a, b) + 1e-15);
        CHECK(h >= 0.0);
        CHECK(harmonic_d(a, a) == doctest::Approx(a).epsilon(1e-15));
    }
}

TEST_CASE("gaussian summary uses the N-1 divisor") {
    const auto s = gaussian_summary(oracle::from_rows({{0, 0}, {2, 0}}));
    CHECK(s.mean(0) == 1.0);
    CHECK(s.mean(1) == 0.0);
    CHECK(s.covariance(0, 0) == 2.0);
    CHECK(s.covariance(0, 1) == 0.0);
    CHECK(s.covariance(1, 1) == 0.0);
    CHECK_THROWS_AS(gaussian_summary(oracle::from_rows({{1, 2}})), ParameterError);
    const auto flat = gaussian_summary(oracle::from_rows({{3, 4}, {3, 4}, {3, 4}}));
    CHECK(flat.covariance.isZero(0.0));
}

TEST_CASE("frechet distance scalar cases") {
    CHECK(frechet_distance(scalar_gaussian(0, 1), scalar_gaussian(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(frechet_distance(scalar_gaussian(0, 4), scalar_gaussian(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(frechet_distance(scalar_gaussian(0.3, 2.5), scalar_gaussian(0.3, 2.5)) <= 1e-12);
    GaussianSummary two;
    two.mean = Eigen::VectorXd::Zero(2);
    two.covariance = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(frechet_distance(scalar_gaussian(0, 1), two), ParameterError);
}

TEST_CASE("frechet distance matches the closed form for diagonal covariances") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 6;
        GaussianSummary a, b;
        a.mean = Eigen::VectorXd(d);
        b.mean = Eigen::VectorXd(d);
        a.covariance = Eigen::MatrixXd::Zero(d, d);
        b.covariance = Eigen::MatrixXd::Zero(d, d);
        double expected = 0.0;
        for (int i = 0; i < d; ++i) {
            a.mean(i) = u(gen) - 2.0;
            b.mean(i) = u(gen) - 2.0;
            a.covariance(i, i) = u(gen);
            b.covariance(i, i) = u(gen);
            const double diff = std::sqrt(a.covariance(i, i)) - std::sqrt(b.covariance(i, i));
            expected += (a.mean(i) - b.mean(i)) * (a.mean(i) - b.mean(i)) + diff * diff;
        }
        CHECK(frechet_distance(a, b) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("property: frechet distance is symmetric and vanishes on identical inputs") {
    std::mt19937 gen(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = gaussian_summary(oracle::random_set(gen, 40, 6));
        const auto y = gaussian_summary(oracle::random_set(gen, 30, 6, -2.0, 0.5));
        CHECK(std::abs(frechet_distance(x, y) - frechet_distance(y, x)) <= 1e-8);
        CHECK(frechet_distance(x, x) <= 1e-6);
        CHECK(frechet_distance(x, y) >= 0.0);
    }
}

TEST_CASE("frechet distance tolerates rank-deficient covariances") {
    // Fewer rows than dimensions: both covariances are singular.
    std::mt19937 gen(8);
    const auto a = gaussian_summary(oracle::random_set(gen, 4, 10));
    const auto b = gaussian_summary(oracle::random_set(gen, 5, 10));
    const double fd = frechet_distance(a, b);
    CHECK(std::isfinite(fd));
    CHECK(fd >= 0.0);
    CHECK(frechet_distance(a, a) <= 1e-6);
}

TEST_CASE("metric_d dispatch") {
    const auto ref = line({0, 1});
    const MetricConfig dnc{MetricKind::DensityCoverage, 1, false};
    CHECK(metric_d(ref, ref, dnc) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(metric_d(ref, ref, MetricConfig{MetricKind::Frechet, 1, false}) <= 1e-12);
    CHECK(metric_d(ref, line({1000, 1001}), dnc) == 0.0);
    CHECK(dnc.orientation() == Orientation::HigherIsBetter);
    CHECK(MetricConfig{MetricKind::Frechet, 5, false}.orientation() == Orientation::LowerIsBetter);
}

TEST_CASE("density/coverage metric is asymmetric in its arguments") {
    const auto tight = line({0, 0.1f, 0.2f, 0.3f});
    const auto loose = line({0, 1, 2, 3});
    const MetricConfig dnc{MetricKind::DensityCoverage, 1, false};
    CHECK(metric_d(tight, loose, dnc) != metric_d(loose, tight, dnc));
}

TEST_CASE("property: density/coverage equal the all-pairs oracle exactly") {
    std::mt19937 gen(2024);
    std::uniform_int_distribution<std::size_t> size(6, 50);
    std::uniform_int_distribution<std::size_t> dims(1, 8);
    const std::size_t ks[] = {1, 3, 5};
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t d = dims(gen);
        const auto ref = oracle::random_set(gen, size(gen), d);
        const auto cand = oracle::random_set(gen, size(gen), d, -0.7, 1.3);
        const std::size_t k = ks[trial % 3];
        const auto got = density_coverage(ref, cand, k);
        const auto [dns, cvg] = oracle::density_coverage(oracle::to_rows(ref), oracle::to_rows(cand), k);
        CHECK(got.density == dns);
        CHECK(got.coverage == cvg);
        CHECK(knn_radii(ref, k).radii == oracle::radii(oracle::to_rows(ref), k));
    }
}

TEST_CASE("property: coverage of a set by itself is exactly one") {
    std::mt19937 gen(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto x = oracle::random_set(gen, 10 + trial, 1 + trial % 5);
        CHECK(coverage(x, x, 1 + trial % 5) == 1.0);
    }
    // Duplicate-heavy sets too: closed balls keep every point covered.
    CHECK(coverage(line({1, 1, 1, 2}), line({1, 1, 1, 2}), 2) == 1.0);
}

TEST_CASE("property: translating both sets leaves density and coverage unchanged") {
    std::mt19937 gen(47);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + trial % 4;
        const auto ref = dyadic_set(gen, 25, d);
        const auto cand = dyadic_set(gen, 18, d);
        std::vector<float> by(d);
        for (std::size_t j = 0; j < d; ++j) by[j] = static_cast<float>(static_cast<int>(gen() % 200) - 100);
        const auto before = density_coverage(ref, cand, 3);
        const auto after = density_coverage(shifted(ref, by), shifted(cand, by), 3);
        CHECK(before.density == after.density);
        CHECK(before.coverage == after.coverage);
    }
}

TEST_CASE("property: sets farther apart than the largest radius score zero") {
    std::mt19937 gen(53);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ref = oracle::random_set(gen, 30, 3);
        const auto r = knn_radii(ref, 5);
        const double max_r = *std::max_element(r.radii.begin(), r.radii.end());
        const float gap = static_cast<float>(2.0 + max_r + trial);
        const auto far = shifted(oracle::random_set(gen, 20, 3), {gap + 2.0f, 0.0f, 0.0f});
        CHECK(density(ref, far, 5) == 0.0);
        CHECK(coverage(ref, far, 5) == 0.0);
    }
}

TEST_CASE("standardization only rescales per dimension") {
    std::mt19937 gen(61);
    const auto ref = oracle::random_set(gen, 40, 3);
    const auto cand = oracle::random_set(gen, 40, 3);
    const auto [r2, c2] = standardize_pair(ref, cand);
    // Reference columns end up with zero mean.
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < r2.rows(); ++i) mean += r2.row(i)[j];
        CHECK(std::abs(mean / 40.0) < 1e-5);
    }
    MetricConfig cfg{MetricKind::DensityCoverage, 5, true};
    const double v = metric_d(ref, cand, cfg);
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
}

TEST_CASE("metric kind names") {
    CHECK(parse_metric_kind("dnc") == MetricKind::DensityCoverage);
    CHECK(parse_metric_kind("fid") == MetricKind::Frechet);
    CHECK_THROWS_AS(parse_metric_kind("precision"), ParameterError);
}

}  // TEST_SUITE
