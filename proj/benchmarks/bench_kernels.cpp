#include <benchmark/benchmark.h>

#include <random>

#include "m3c/assignment.hpp"
#include "m3c/coarse.hpp"
#include "m3c/cone.hpp"
#include "m3c/dual.hpp"
#include "m3c/features.hpp"
#include "m3c/m3c.hpp"
#include "m3c/margin.hpp"

using namespace m3c;

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = normal(rng);
    return X;
}

}  // namespace

static void BM_FeatureMapRows(benchmark::State& state) {
    const auto map = make_feature_map(1.0, 50, 2, 7);
    const Eigen::MatrixXd X = random_points(state.range(0), 2, 11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(map.apply_rows(X));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FeatureMapRows)->Arg(1000)->Arg(4000);

static void BM_KMedoids(benchmark::State& state) {
    const Eigen::MatrixXd X = random_points(state.range(0), 4, 13);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kmedoids(X, 30, 10, 17));
    }
}
BENCHMARK(BM_KMedoids)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_LabelCosts(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Eigen::MatrixXd sbar =
        margin_scores(random_points(n, 50, 3), random_points(3, 50, 5),
                      Eigen::Vector3d(0.1, -0.2, 0.0));
    const Eigen::MatrixXd slow =
        margin_scores(random_points(n, 50, 4), random_points(3, 50, 6),
                      Eigen::Vector3d(0.0, 0.1, -0.1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(margin_label_costs(sbar, slow, true));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LabelCosts)->Arg(4000);

static void BM_Assignment(benchmark::State& state) {
    const Eigen::MatrixXd H = random_points(state.range(0), 3, 23).cwiseAbs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_assignment({H, 0.2, 0.5}));
    }
}
BENCHMARK(BM_Assignment)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_RuleFit(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    std::mt19937_64 rng(29);
    MarginProblem p;
    p.phi_bar = random_points(n, 50, 31);
    p.phi_low = random_points(n, 50, 37);
    p.kappa = 3;
    for (Eigen::Index i = 0; i < n; ++i)
        p.y.push_back(static_cast<int>(rng() % 3));
    p.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    p.beta = 0.01;
    p.with_bias = true;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_margin_qp(p));
    }
}
BENCHMARK(BM_RuleFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Relaxation(benchmark::State& state) {
    const Eigen::Index nc = state.range(0);
    const Eigen::MatrixXd phi_bar = random_points(nc, 50, 41);
    const Eigen::MatrixXd phi_low =
        phi_bar + 0.1 * random_points(nc, 50, 43);
    const Eigen::VectorXd weights =
        Eigen::VectorXd::Constant(nc, 1.0 / static_cast<double>(nc));
    const DualData dual =
        assemble_dual_data(phi_bar, phi_low, build_B(3), weights, 0.01);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            solve_relaxation(dual, 0.01, 0.99, 1e-3, 50000, 1e-3));
    }
}
BENCHMARK(BM_Relaxation)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
