#include "m3c/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "m3c/rng.hpp"

namespace m3c {

Eigen::VectorXd FeatureMap::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim)
        throw std::invalid_argument("FeatureMap: input dimension mismatch");
    const double scale = std::sqrt(2.0 / output_dim);
    return (scale * ((frequencies * x + phases).array().cos())).matrix();
}

Eigen::MatrixXd FeatureMap::apply_rows(const Eigen::MatrixXd& X) const {
    if (X.cols() != input_dim)
        throw std::invalid_argument("FeatureMap: input dimension mismatch");
    const double scale = std::sqrt(2.0 / output_dim);
    Eigen::MatrixXd Z = X * frequencies.transpose();
    Z.rowwise() += phases.transpose();
    return scale * Z.array().cos().matrix();
}

FeatureMap make_feature_map(double sigma, int d, int input_dim,
                            std::uint64_t seed) {
    if (sigma <= 0.0)
        throw std::invalid_argument("make_feature_map: sigma must be positive");
    if (d < 1 || input_dim < 1)
        throw std::invalid_argument("make_feature_map: dimensions must be >= 1");

    FeatureMap map;
    map.sigma = sigma;
    map.output_dim = d;
    map.input_dim = input_dim;
    map.seed = seed;
    map.frequencies.resize(d, input_dim);
    map.phases.resize(d);

    auto rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Draw standard normals first, then scale by 1/sigma: the same seed
    // yields the same underlying draws for every width on the grid.
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < input_dim; ++j)
            map.frequencies(i, j) = normal(rng) / sigma;
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < d; ++i) map.phases(i) = uniform(rng);
    return map;
}

Eigen::VectorXd pair_feature(const FeatureMap& map, const Eigen::VectorXd& xbar,
                             const Eigen::VectorXd& xlow) {
    Eigen::VectorXd out(2 * map.output_dim);
    out.head(map.output_dim) = map(xbar);
    out.tail(map.output_dim) = map(xlow);
    return out;
}

double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double sigma) {
    return std::exp(-(x - y).squaredNorm() / (2.0 * sigma * sigma));
}

std::vector<double> default_sigma_grid() {
    std::vector<double> grid;
    for (int e = -4; e <= 4; ++e) grid.push_back(std::ldexp(1.0, e));
    return grid;
}

}  // namespace m3c
