#include "m3c/types.hpp"

#include <stdexcept>
#include <string>

namespace m3c {

void validate(const Trajectory& traj) {
    if (traj.dt <= 0.0)
        throw std::invalid_argument("Trajectory: dt must be positive");
    if (traj.points.rows() < 1)
        throw std::invalid_argument("Trajectory: needs at least one sample");
    if (traj.points.cols() < 1)
        throw std::invalid_argument("Trajectory: state dimension must be >= 1");
    if (!traj.points.allFinite())
        throw std::invalid_argument("Trajectory: non-finite coordinate");
}

Eigen::VectorXd TransitionPairSet::pair_vector(Eigen::Index n) const {
    Eigen::VectorXd v(2 * dim());
    v.head(dim()) = first.row(n).transpose();
    v.tail(dim()) = second.row(n).transpose();
    return v;
}

Eigen::MatrixXd TransitionPairSet::concatenated() const {
    Eigen::MatrixXd out(size(), 2 * dim());
    out.leftCols(dim()) = first;
    out.rightCols(dim()) = second;
    return out;
}

TransitionPairSet extract_pairs(const std::vector<Trajectory>& trajs) {
    if (trajs.empty())
        throw std::invalid_argument("extract_pairs: no trajectories");
    const Eigen::Index d = trajs.front().dim();
    Eigen::Index n_pairs = 0;
    for (const auto& t : trajs) {
        validate(t);
        if (t.dim() != d)
            throw std::invalid_argument(
                "extract_pairs: trajectory " + std::to_string(t.id) +
                " has dimension " + std::to_string(t.dim()) + ", expected " +
                std::to_string(d));
        n_pairs += std::max<Eigen::Index>(t.length() - 1, 0);
    }
    if (n_pairs == 0)
        throw std::invalid_argument(
            "extract_pairs: no trajectory has two or more samples");

    TransitionPairSet pairs;
    pairs.first.resize(n_pairs, d);
    pairs.second.resize(n_pairs, d);
    Eigen::Index row = 0;
    for (const auto& t : trajs) {
        for (Eigen::Index i = 0; i + 1 < t.length(); ++i, ++row) {
            pairs.first.row(row) = t.points.row(i);
            pairs.second.row(row) = t.points.row(i + 1);
        }
    }
    return pairs;
}

void validate(const LabelAssignment& labels) {
    if (labels.kappa < 1)
        throw std::invalid_argument("LabelAssignment: kappa must be >= 1");
    for (int v : labels.y)
        if (v < 0 || v >= labels.kappa)
            throw std::invalid_argument("LabelAssignment: label out of range");
}

std::vector<long> class_counts(const LabelAssignment& labels) {
    std::vector<long> counts(labels.kappa, 0);
    for (int v : labels.y) ++counts[v];
    return counts;
}

RelationMatrices labels_to_relations(const LabelAssignment& labels) {
    validate(labels);
    const Eigen::Index n = labels.size();
    RelationMatrices rel;
    rel.D = Eigen::MatrixXd::Zero(n, labels.kappa);
    for (Eigen::Index i = 0; i < n; ++i) rel.D(i, labels.y[i]) = 1.0;
    rel.M = rel.D * rel.D.transpose();
    return rel;
}

}  // namespace m3c
