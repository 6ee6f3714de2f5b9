#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "m3c/types.hpp"

namespace m3c {

// Two-dimensional overdamped diffusion with constant diffusion matrix:
//   dx = drift(x) dt + diffusion dW.
// The drift may carry componentwise mobility prefactors, so it is stored
// separately from the bare potential gradient.
struct DiffusionModel {
    std::string name;
    std::function<double(const Eigen::Vector2d&)> potential;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> gradient;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> drift;
    Eigen::Matrix2d diffusion = Eigen::Matrix2d::Identity();
    double default_integrator_dt = 1e-3;
};

// Three-state double-banded landscape: six Gaussian wells arranged in two
// rows, paired into three metastable states by a low barrier in x2.
DiffusionModel make_model1();
// Horseshoe landscape: two wells on the left and an open ring segment on
// the right, three metastable states.
DiffusionModel make_model2();
DiffusionModel diffusion_model(const std::string& name);  // "model1"|"model2"

// Euler-Maruyama integration, recording every sample_dt. Deterministic per
// seed; aborts on numerical blow-up.
Trajectory simulate(const DiffusionModel& model, const Eigen::Vector2d& x0,
                    double t_end, double sample_dt, double integrator_dt,
                    std::uint64_t seed, int traj_id = 0);

// Markov chain over {1..kappa} started from its stationary distribution.
struct LabelChainSpec {
    Eigen::MatrixXd P;  // row-stochastic
    long length = 0;
    std::uint64_t seed = 0;
};

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);
std::vector<int> generate_label_chain(const LabelChainSpec& spec);  // 0-based

// The slowly-mixing chain matrices used by the sequence benchmarks,
// kappa = 2, 3 or 4.
Eigen::MatrixXd benchmark_chain_matrix(int kappa);

// Draws a pattern sequence following a label chain, sampling without
// repetition inside each class pool; chains demanding more patterns than a
// pool holds are regenerated (bounded retries).
struct LabeledSequence {
    Eigen::MatrixXd patterns;          // N x p
    std::vector<int> labels;           // 0-based chain labels
    std::vector<std::vector<long>> chosen;  // per class: pool rows consumed
};

LabeledSequence make_labeled_sequence(const LabelChainSpec& spec,
                                      const std::vector<Eigen::MatrixXd>& pools,
                                      int max_retries = 100);

}  // namespace m3c
