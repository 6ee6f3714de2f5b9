#pragma once

#include <Eigen/Dense>
#include <vector>

#include "m3c/features.hpp"

namespace m3c {

// Piecewise-linear decomposition of feature space: state x belongs to the
// class maximizing w_k^T phi(x) + b_k. Ties go to the smallest class index,
// so prediction is deterministic.
struct DecisionRule {
    Eigen::MatrixXd W;  // kappa x d, row k is w_k^T
    Eigen::VectorXd b;  // kappa
    FeatureMap feature_map;

    int kappa() const { return static_cast<int>(W.rows()); }

    Eigen::VectorXd decision_values(const Eigen::VectorXd& x) const;
    int predict(const Eigen::VectorXd& x) const;  // 0-based label
    std::vector<int> predict_rows(const Eigen::MatrixXd& X) const;
};

// argmax with smallest-index tie break.
int argmax_first(const Eigen::VectorXd& values);

}  // namespace m3c
