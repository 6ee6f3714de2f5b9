#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace m3c {

// Random Fourier feature map approximating the Gaussian kernel
// exp(-|x - x'|^2 / (2 sigma^2)). Frequencies are drawn from
// N(0, sigma^-2 I) and phases uniformly from [0, 2pi); the map is
//   phi(x) = sqrt(2/d) * cos(F x + p)
// so that E[phi(x)^T phi(x')] equals the kernel. Deterministic in the seed
// and immutable, hence safe to share across threads.
struct FeatureMap {
    double sigma = 1.0;
    int output_dim = 0;
    int input_dim = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd frequencies;  // d x D
    Eigen::VectorXd phases;       // d

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
    // Row-wise application: X is N x D, result is N x d.
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const;
};

FeatureMap make_feature_map(double sigma, int d, int input_dim,
                            std::uint64_t seed);

// Extended feature of a transition pair: (phi(xbar); phi(xlow)), dim 2d.
Eigen::VectorXd pair_feature(const FeatureMap& map, const Eigen::VectorXd& xbar,
                             const Eigen::VectorXd& xlow);

// Exact Gaussian kernel value, used as the Monte-Carlo reference for the
// feature approximation.
double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double sigma);

// The default width grid {2^-4, ..., 2^4}.
std::vector<double> default_sigma_grid();

}  // namespace m3c
