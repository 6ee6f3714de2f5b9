#include <doctest.h>

#include <limits>
#include <random>

#include "m3c/coarse.hpp"

using namespace m3c;

namespace {

Eigen::MatrixXd two_blobs(int per_blob, double gap, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.2);
    Eigen::MatrixXd points(2 * per_blob, 2);
    for (int i = 0; i < per_blob; ++i) {
        points(i, 0) = normal(rng) - gap / 2;
        points(i, 1) = normal(rng);
        points(per_blob + i, 0) = normal(rng) + gap / 2;
        points(per_blob + i, 1) = normal(rng);
    }
    return points;
}

double scatter_of(const Eigen::MatrixXd& points,
                  const std::vector<Eigen::Index>& medoids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : medoids)
            best = std::min(best, (points.row(i) - points.row(m)).norm());
        total += best;
    }
    return total;
}

}  // namespace

TEST_CASE("k equal to the point count gives zero scatter") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Random(6, 3);
    const auto km = kmedoids(points, 6, 5, 1);
    CHECK(km.scatter == doctest::Approx(0.0));
    for (Eigen::Index i = 0; i < 6; ++i)
        CHECK(km.medoids[km.assignment[i]] == i);
}

TEST_CASE("two separated blobs match exhaustive medoid enumeration") {
    const auto points = two_blobs(5, 6.0, 17);
    const auto km = kmedoids(points, 2, 20, 3);

    // brute force over all medoid pairs
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < 10; ++a)
        for (Eigen::Index b = a + 1; b < 10; ++b)
            best = std::min(best, scatter_of(points, {a, b}));
    CHECK(km.scatter == doctest::Approx(best).epsilon(1e-12));

    // assignment splits the blobs
    for (int i = 0; i < 5; ++i) CHECK(km.assignment[i] == km.assignment[0]);
    for (int i = 5; i < 10; ++i) CHECK(km.assignment[i] == km.assignment[5]);
    CHECK(km.assignment[0] != km.assignment[5]);
}

TEST_CASE("more restarts never worsen the scatter") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Random(40, 2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto one = kmedoids(points, 4, 1, seed);
        const auto many = kmedoids(points, 4, 25, seed);
        CHECK(many.scatter <= one.scatter + 1e-12);
    }
}

TEST_CASE("medoids are members of the point set") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Random(30, 3);
    const auto km = kmedoids(points, 5, 10, 9);
    for (auto m : km.medoids) {
        CHECK(m >= 0);
        CHECK(m < 30);
    }
}

TEST_CASE("k beyond the distinct point count is rejected") {
    Eigen::MatrixXd points(4, 2);
    points << 1, 1, 1, 1, 2, 2, 2, 2;  // only two distinct values
    CHECK_THROWS_AS(static_cast<void>(kmedoids(points, 3, 5, 1)),
                    std::invalid_argument);
    CHECK_NOTHROW(static_cast<void>(kmedoids(points, 2, 5, 1)));
}

TEST_CASE("kmedoids is deterministic in the seed") {
    Eigen::MatrixXd points = Eigen::MatrixXd::Random(50, 2);
    const auto a = kmedoids(points, 6, 10, 1234, 2);
    const auto b = kmedoids(points, 6, 10, 1234, 1);
    CHECK(a.medoids == b.medoids);
    CHECK(a.assignment == b.assignment);
}

TEST_CASE("coarse graining normalizes weights over nonempty bins") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    TransitionPairSet pairs;
    pairs.first.resize(60, 2);
    pairs.second.resize(60, 2);
    for (Eigen::Index i = 0; i < 60; ++i)
        for (int j = 0; j < 2; ++j) {
            pairs.first(i, j) = normal(rng);
            pairs.second(i, j) = pairs.first(i, j) + 0.1 * normal(rng);
        }
    const auto coarse = coarse_grain(pairs, 8, 10, 7);
    CHECK(coarse.size() == 8);
    CHECK(coarse.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(coarse.weights.minCoeff() > 0.0);
    // centers are actual pairs
    for (int b = 0; b < 8; ++b) {
        const auto idx = coarse.medoid_index[b];
        CHECK((coarse.centers.first.row(b) - pairs.first.row(idx))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK((coarse.centers.second.row(b) - pairs.second.row(idx))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    // every pair maps to a bin
    for (int bin : coarse.bin_of_pair) {
        CHECK(bin >= 0);
        CHECK(bin < 8);
    }
}

TEST_CASE("coarse graining rejects degenerate inputs") {
    TransitionPairSet pairs;
    pairs.first = Eigen::MatrixXd::Ones(10, 2);
    pairs.second = Eigen::MatrixXd::Ones(10, 2);
    CHECK_THROWS_AS(static_cast<void>(coarse_grain(pairs, 3, 5, 1)),
                    std::invalid_argument);
}
