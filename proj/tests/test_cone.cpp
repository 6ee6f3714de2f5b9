#include <doctest.h>

#include <filesystem>
#include <random>

#include "m3c/cone.hpp"

using namespace m3c;

namespace {

// min tr(X) s.t. diag(X) = 1, X PSD, side k
ConeProgram trace_problem(int side) {
    ConeProgram cp;
    const Eigen::Index nut = svec_dim(side);
    cp.c = Eigen::VectorXd::Zero(nut);
    // variables are svec(X); objective = sum of diagonal entries
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd b(side + nut);
    Eigen::Index row = 0;
    Eigen::Index idx = 0;
    // zero rows: diagonal entries equal one
    std::vector<Eigen::Index> diag_idx;
    for (Eigen::Index j = 0; j < side; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            if (i == j) diag_idx.push_back(idx);
            ++idx;
        }
    for (Eigen::Index j = 0; j < side; ++j) {
        trips.emplace_back(static_cast<int>(row), static_cast<int>(diag_idx[j]),
                           1.0);
        b(row++) = 1.0;
        cp.c(diag_idx[j]) = 1.0;
    }
    // PSD rows: s = svec(X)
    for (Eigen::Index k = 0; k < nut; ++k) {
        trips.emplace_back(static_cast<int>(row), static_cast<int>(k), -1.0);
        b(row++) = 0.0;
    }
    cp.A.resize(side + nut, nut);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b = b;
    cp.cones.zero = side;
    cp.cones.psd = {side};
    return cp;
}

}  // namespace

TEST_CASE("svec/smat round trip preserves inner products") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd A(4, 4), B(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) {
        A(i) = normal(rng);
        B(i) = normal(rng);
    }
    A = (0.5 * (A + A.transpose())).eval();
    B = (0.5 * (B + B.transpose())).eval();
    CHECK((smat(svec(A), 4) - A).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(svec(A).dot(svec(B)) ==
          doctest::Approx((A * B).trace()).epsilon(1e-12));
}

TEST_CASE("trace minimization under unit diagonal gives the side length") {
    const auto cp = trace_problem(3);
    const auto sol = solve_cone(cp, 1e-7);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-5));
    // the PSD slack block must be near-PSD
    const Eigen::MatrixXd X = smat(sol.s.tail(svec_dim(3)), 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
}

TEST_CASE("arrow PSD block encodes the quadratic bound s >= theta^T theta") {
    // variables: none; feasibility of [[I, th],[th^T, s]] >= 0 at fixed
    // numbers is checked through a 1-variable problem: minimize t subject to
    // the block with s = t; optimum is theta^T theta.
    const Eigen::Vector2d theta(0.3, -0.4);
    const Eigen::Index side = 3;
    const Eigen::Index nut = svec_dim(side);
    ConeProgram cp;
    cp.c = Eigen::VectorXd::Ones(1);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd b(nut);
    Eigen::Index row = 0;
    for (Eigen::Index j = 0; j < side; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            double val = 0.0;
            if (i == j) val = (i < 2) ? 1.0 : 0.0;
            if (j == 2 && i < 2) val = std::sqrt(2.0) * theta(i);
            if (i == 2 && j == 2) {
                trips.emplace_back(static_cast<int>(row), 0, -1.0);
            }
            b(row++) = val;
        }
    cp.A.resize(nut, 1);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b = b;
    cp.cones.psd = {side};
    const auto sol = solve_cone(cp, 1e-8);
    REQUIRE(sol.status == SolveStatus::optimal);
    const double qsq = theta.squaredNorm();
    CHECK(sol.objective == doctest::Approx(qsq).epsilon(1e-4));
    // feasibility flips within 0.01 of the threshold
    CHECK(sol.objective < qsq + 0.01);
    CHECK(sol.objective > qsq - 0.01);
}

TEST_CASE("second-order cone rows work") {
    // min x s.t. |(x, 3)| <= 5  ->  x = -4
    ConeProgram cp;
    cp.c = Eigen::VectorXd::Ones(1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.emplace_back(1, 0, -1.0);
    cp.A.resize(3, 1);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b.resize(3);
    cp.b << 5.0, 0.0, 3.0;
    cp.cones.soc = {3};
    const auto sol = solve_cone(cp, 1e-8);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(-4.0).epsilon(1e-5));
}

TEST_CASE("box rows clamp a free variable into [0,1]") {
    // min x s.t. x in [0,1]  -> 0; max via negated cost -> 1
    ConeProgram cp;
    cp.c = Eigen::VectorXd::Ones(1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.emplace_back(0, 0, -1.0);
    cp.A.resize(1, 1);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b = Eigen::VectorXd::Zero(1);
    cp.cones.box = 1;
    auto sol = solve_cone(cp, 1e-8);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(0.0).epsilon(1e-5));
    cp.c(0) = -1.0;
    sol = solve_cone(cp, 1e-8);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("infeasible equalities produce a certificate") {
    // x = 0 and x = 1 simultaneously
    ConeProgram cp;
    cp.c = Eigen::VectorXd::Ones(1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.emplace_back(0, 0, 1.0);
    trips.emplace_back(1, 0, 1.0);
    cp.A.resize(2, 1);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b.resize(2);
    cp.b << 0.0, 1.0;
    cp.cones.zero = 2;
    const auto sol = solve_cone(cp, 1e-7, 20000);
    CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("unbounded problems are detected") {
    // min -x s.t. x >= 0
    ConeProgram cp;
    cp.c = -Eigen::VectorXd::Ones(1);
    std::vector<Eigen::Triplet<double>> trips;
    trips.emplace_back(0, 0, -1.0);
    cp.A.resize(1, 1);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b = Eigen::VectorXd::Zero(1);
    cp.cones.nonneg = 1;
    const auto sol = solve_cone(cp, 1e-7, 20000);
    CHECK(sol.status == SolveStatus::unbounded);
}

TEST_CASE("factor_psd reconstructs identity and rank-one matrices") {
    const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd R = factor_psd(I2, 1.0);
    CHECK(R.cols() == 2);
    CHECK((R * R.transpose() - I2).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
    const Eigen::MatrixXd R1 = factor_psd(ones, 1.0);
    CHECK(R1.cols() == 1);
    CHECK((R1 * R1.transpose() - ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("factor_psd handles scaling and rank deficiency") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd W(6, 3);
    for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = normal(rng);
    const Eigen::MatrixXd P = W * W.transpose();
    const double beta = 0.01;
    const Eigen::MatrixXd R = factor_psd(P, beta);
    CHECK(R.cols() == 3);
    const Eigen::MatrixXd target = P / beta;
    CHECK((R * R.transpose() - target).norm() / target.norm() < 1e-8);
}

TEST_CASE("factor_psd rejects indefinite input") {
    Eigen::MatrixXd P(2, 2);
    P << 1.0, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(static_cast<void>(factor_psd(P, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("cone program dump and load round trip") {
    namespace fs = std::filesystem;
    const auto cp = trace_problem(3);
    const fs::path file = fs::temp_directory_path() / "m3c_cone_dump.txt";
    write_cone_program(cp, file);
    const auto back = read_cone_program(file);
    CHECK(back.cones.zero == cp.cones.zero);
    REQUIRE(back.cones.psd.size() == 1);
    CHECK(back.cones.psd[0] == 3);
    CHECK((back.b - cp.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((Eigen::MatrixXd(back.A) - Eigen::MatrixXd(cp.A))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    fs::remove(file);
}
