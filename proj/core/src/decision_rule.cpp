#include "m3c/decision_rule.hpp"

#include <stdexcept>

namespace m3c {

int argmax_first(const Eigen::VectorXd& values) {
    int best = 0;
    for (int k = 1; k < values.size(); ++k)
        if (values(k) > values(best)) best = k;
    return best;
}

Eigen::VectorXd DecisionRule::decision_values(const Eigen::VectorXd& x) const {
    return W * feature_map(x) + b;
}

int DecisionRule::predict(const Eigen::VectorXd& x) const {
    return argmax_first(decision_values(x));
}

std::vector<int> DecisionRule::predict_rows(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd scores = feature_map.apply_rows(X) * W.transpose();
    scores.rowwise() += b.transpose();
    std::vector<int> labels(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        labels[i] = argmax_first(scores.row(i).transpose());
    return labels;
}

}  // namespace m3c
