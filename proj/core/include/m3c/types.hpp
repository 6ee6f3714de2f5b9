#pragma once

#include <Eigen/Dense>
#include <vector>

namespace m3c {

// A single simulation or measurement run: an ordered sequence of state
// vectors sampled every dt time units. Immutable after construction.
struct Trajectory {
    int id = 0;
    double dt = 1.0;
    Eigen::MatrixXd points;  // one row per sample, columns are coordinates

    Eigen::Index length() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

// Throws std::invalid_argument if dt <= 0, the trajectory is empty,
// or any coordinate is non-finite.
void validate(const Trajectory& traj);

// The multiset of consecutive state pairs (x_t, x_{t+1}) pooled over
// trajectories, stored as two aligned N x D matrices. This is the unit of
// clustering: both members of a pair must end up in the same metastable
// state.
struct TransitionPairSet {
    Eigen::MatrixXd first;   // N x D, rows are the earlier states
    Eigen::MatrixXd second;  // N x D, rows are the later states

    Eigen::Index size() const { return first.rows(); }
    Eigen::Index dim() const { return first.cols(); }

    // Concatenated (first | second) row for pair n, dimension 2D.
    Eigen::VectorXd pair_vector(Eigen::Index n) const;
    // All pairs as an N x 2D matrix.
    Eigen::MatrixXd concatenated() const;
};

// Extracts all within-trajectory consecutive pairs, in trajectory order.
// N = sum over trajectories of (length - 1); length-1 trajectories
// contribute nothing. Throws on empty input, mismatched dimensions, or if
// no trajectory has at least two samples.
TransitionPairSet extract_pairs(const std::vector<Trajectory>& trajs);

// A hard assignment of items to kappa classes. Labels are 0-based in
// memory; file formats and the CLI use 1-based labels.
struct LabelAssignment {
    std::vector<int> y;
    int kappa = 2;

    Eigen::Index size() const { return static_cast<Eigen::Index>(y.size()); }
};

void validate(const LabelAssignment& labels);

std::vector<long> class_counts(const LabelAssignment& labels);

// Binary relation matrices of a labeling: D(i,j) = 1 iff item i has label
// j, and M = D D^T, so M(i,j) = 1 iff items i and j share a label.
struct RelationMatrices {
    Eigen::MatrixXd D;  // N x kappa
    Eigen::MatrixXd M;  // N x N
};

RelationMatrices labels_to_relations(const LabelAssignment& labels);

}  // namespace m3c
