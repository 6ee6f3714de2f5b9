#include <doctest.h>

#include <cmath>
#include <random>

#include "m3c/features.hpp"

using namespace m3c;

TEST_CASE("feature map is deterministic in the seed") {
    const auto a = make_feature_map(1.3, 16, 3, 42);
    const auto b = make_feature_map(1.3, 16, 3, 42);
    CHECK((a.frequencies - b.frequencies).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.phases - b.phases).cwiseAbs().maxCoeff() == 0.0);
    const auto c = make_feature_map(1.3, 16, 3, 43);
    CHECK((a.frequencies - c.frequencies).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("feature vectors have norm at most sqrt(2)") {
    const auto map = make_feature_map(0.5, 64, 2, 7);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector2d x(normal(rng), normal(rng));
        const auto phi = map(x);
        CHECK(phi.norm() <= std::sqrt(2.0) + 1e-12);
        const double self = phi.dot(phi);
        CHECK(self >= 0.0);
        CHECK(self <= 2.0 + 1e-12);
    }
}

TEST_CASE("pair feature concatenates both halves exactly") {
    const auto map = make_feature_map(1.0, 10, 2, 9);
    const Eigen::Vector2d a(0.4, -1.2), b(2.0, 0.3);
    const auto pf = pair_feature(map, a, b);
    REQUIRE(pf.size() == 20);
    CHECK((pf.head(10) - map(a)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pf.tail(10) - map(b)).cwiseAbs().maxCoeff() == 0.0);
    const auto same = pair_feature(map, a, a);
    CHECK((same.head(10) - same.tail(10)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_rows equals the per-point map") {
    const auto map = make_feature_map(0.8, 6, 3, 21);
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(15, 3);
    const Eigen::MatrixXd Phi = map.apply_rows(X);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        CHECK((Phi.row(i).transpose() - map(X.row(i).transpose()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
}

TEST_CASE("kernel estimate at unit distance approaches exp(-1/2)") {
    // sigma = 1, d = 2000: the Monte-Carlo error of the kernel estimate at
    // |x - x'| = 1 stays well under 0.05 on average
    const int d = 2000;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    double total_err = 0.0;
    const int n_pairs = 50;
    const auto map = make_feature_map(1.0, d, 4, 1234);
    for (int i = 0; i < n_pairs; ++i) {
        Eigen::VectorXd x(4), dir(4);
        for (int j = 0; j < 4; ++j) {
            x(j) = normal(rng);
            dir(j) = normal(rng);
        }
        dir.normalize();
        const Eigen::VectorXd y = x + dir;
        total_err += std::abs(map(x).dot(map(y)) - std::exp(-0.5));
    }
    CHECK(total_err / n_pairs < 0.05);
}

TEST_CASE("kernel estimate is unbiased over frequency redraws") {
    // average over independent maps converges to the exact kernel value
    const Eigen::Vector2d x(0.3, -0.2), y(-0.5, 0.9);
    const double sigma = 0.9;
    const double exact = gaussian_kernel(x, y, sigma);
    double mean = 0.0;
    const int redraws = 400;
    for (int r = 0; r < redraws; ++r) {
        const auto map = make_feature_map(sigma, 8, 2, 1000 + r);
        mean += map(x).dot(map(y));
    }
    mean /= redraws;
    // d * redraws = 3200 effective samples, O(1/sqrt(n)) tolerance
    CHECK(std::abs(mean - exact) < 0.05);
}

TEST_CASE("kernel estimate depends on the offset, not the location") {
    const auto map = make_feature_map(1.1, 4000, 2, 77);
    const Eigen::Vector2d delta(0.6, -0.3);
    const Eigen::Vector2d a(0.0, 0.0), b(5.0, -3.0);
    const double k1 = map(a).dot(map((a + delta).eval()));
    const double k2 = map(b).dot(map((b + delta).eval()));
    CHECK(k1 == doctest::Approx(k2).epsilon(0.15));
}

TEST_CASE("default width grid is the nine powers of two") {
    const auto grid = default_sigma_grid();
    REQUIRE(grid.size() == 9);
    CHECK(grid.front() == doctest::Approx(1.0 / 16.0));
    CHECK(grid.back() == doctest::Approx(16.0));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] == doctest::Approx(2.0 * grid[i - 1]));
}

TEST_CASE("feature map rejects invalid parameters") {
    CHECK_THROWS_AS(static_cast<void>(make_feature_map(0.0, 8, 2, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(make_feature_map(1.0, 0, 2, 1)),
                    std::invalid_argument);
    const auto map = make_feature_map(1.0, 8, 2, 1);
    CHECK_THROWS_AS(static_cast<void>(map(Eigen::Vector3d(1, 2, 3))),
                    std::invalid_argument);
}
