#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "m3c/eval.hpp"
#include "m3c/m3c.hpp"
#include "m3c/types.hpp"

namespace m3c {

// Every decomposition method reduces to a function assigning any state
// vector a metastable label, which is all the evaluation pipeline needs.
using PointLabeler = std::function<int(const Eigen::VectorXd&)>;

// The flat point set pooled over trajectories, in trajectory order.
Eigen::MatrixXd flatten_points(const std::vector<Trajectory>& trajs);

int nearest_row(const Eigen::MatrixXd& rows, const Eigen::VectorXd& x);

PointLabeler nearest_medoid_labeler(Eigen::MatrixXd medoids);
PointLabeler rule_labeler(DecisionRule rule);
PointLabeler binned_labeler(Eigen::MatrixXd bin_centers,
                            std::vector<int> lumping);

// Geometric baseline: k-medoids directly on the point set.
struct KMedoidsDecomposition {
    Eigen::MatrixXd medoids;       // kappa x D
    std::vector<int> point_labels; // labels of the training points
};

KMedoidsDecomposition run_kmedoids_decomposition(
    const std::vector<Trajectory>& trajs, int kappa, int restarts,
    std::uint64_t seed);

// Plain maximum margin clustering of the point set, solved by the same
// coarse-grain / relax / recover / alternate scheme but with single-point
// features and competitors.
struct MMCResult {
    DecisionRule rule;
    std::vector<int> point_labels;
    std::vector<IterationRecord> history;
    double objective = 0.0;
    double sigma = 0.0;
    std::vector<double> grid_objectives;
    SolveStatus status = SolveStatus::numerical_error;
};

MMCResult run_mmc(const std::vector<Trajectory>& trajs,
                  const M3CConfig& config);

// Kinetic baseline: discretize with k-medoids bins, estimate the bin
// transition matrix from counts at lag dt, lump bins with a k-means
// clustering of the dominant right-eigenvector embedding.
struct BinnedModel {
    Eigen::MatrixXd bin_centers;
    TransitionMatrix bin_transitions;
    std::vector<int> lumping;  // bin -> metastable label
    std::vector<std::string> warnings;
};

BinnedModel run_pcca(const std::vector<Trajectory>& trajs, int kappa,
                     int n_bins, int restarts, std::uint64_t seed);

}  // namespace m3c
