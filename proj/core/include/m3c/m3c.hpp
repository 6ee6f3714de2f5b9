#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "m3c/coarse.hpp"
#include "m3c/decision_rule.hpp"
#include "m3c/dual.hpp"
#include "m3c/margin.hpp"
#include "m3c/types.hpp"

namespace m3c {

struct M3CConfig {
    int kappa = 3;
    double beta = 0.01;
    double rho_l = 0.01;
    double rho_u = 0.99;
    int n_bins = 30;
    std::vector<double> sigma_grid;  // empty -> default grid 2^-4..2^4
    int feature_dim = 50;
    double alpha_h = 0.0;   // stop when the label Hamming distance <= alpha_h
    int max_rounds = 100;
    int kmedoids_restarts = 100;
    int kmeans_restarts = 20;
    // The relaxation only seeds the local search, so its tolerance can stay
    // well above the conic solver's 1e-6 default.
    double relax_tol = 1e-3;
    int relax_max_iters = 50000;
    double relax_centering = 1e-3;
    double rule_tol = 1e-7;
    int grid_threads = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 1;

    std::vector<double> sigmas() const;
};

void validate(const M3CConfig& config);

// Solution of the convex relaxation of the coarse-grained clustering
// problem: relaxed relation matrices plus the dual-side variables.
struct RelaxationSolution {
    Eigen::MatrixXd M;      // N^c x N^c, in [0,1], diag 1
    Eigen::MatrixXd D;      // N^c x kappa, in [0,1]
    Eigen::VectorXd alpha;  // N^c
    Eigen::VectorXd theta;
    double zeta = 0.0;      // relaxation objective
    SolveStatus status = SolveStatus::numerical_error;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

// centering > 0 adds centering * |M|_F^2 to the objective. The program has
// a large optimal face in M (row budget not claimed by similar bins can sit
// anywhere), and a first-order solver lands on an arbitrary point of it;
// the strongly convex term selects the centered solution instead, which is
// the one whose block structure survives spectral rounding. Pass 0 for the
// plain program when the optimal value itself is the quantity of interest.
RelaxationSolution solve_relaxation(const DualData& dual, double rho_l,
                                    double rho_u, double tol = 1e-5,
                                    int max_iters = 50000,
                                    double centering = 0.0);

// Spectral rounding of the relaxed similarity matrix into kappa nonempty
// clusters.
std::vector<int> recover_coarse_labels(const Eigen::MatrixXd& M, int kappa,
                                       std::uint64_t seed,
                                       int kmeans_restarts = 20);

// Kinetic lumping of the coarse bins: consecutive pairs chain bins into a
// transition graph (pair n continues pair n+1 when they share the middle
// point), whose dominant right eigenvectors are clustered into kappa
// groups. Used as a second initialization candidate for the local search.
std::vector<int> kinetic_bin_labels(const TransitionPairSet& pairs,
                                    const CoarsePairSet& coarse, int kappa,
                                    std::uint64_t seed,
                                    int kmeans_restarts = 20);

// Pair n inherits the label of its coarse bin.
std::vector<int> lift_labels(const std::vector<int>& coarse_labels,
                             const std::vector<int>& bin_of_pair);

// Spec-level wrappers over the margin machinery, working directly on a
// transition pair set and feature map.
RuleFit solve_rule_given_labels(const TransitionPairSet& pairs,
                                const LabelAssignment& labels,
                                const FeatureMap& map, double beta,
                                double tol = 1e-7);
Eigen::MatrixXd label_costs(const TransitionPairSet& pairs,
                            const DecisionRule& rule);
double evaluate_objective(const TransitionPairSet& pairs,
                          const LabelAssignment& labels,
                          const DecisionRule& rule, double beta);

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    long hamming = 0;
    std::vector<long> class_counts;
};

struct LocalSearchResult {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
    std::vector<int> labels;
    std::vector<IterationRecord> history;
    double objective = 0.0;
    bool converged = false;
};

// Alternating minimization: rule fit at fixed labels, then optimal
// rebalanced relabeling at fixed rule, until the label change drops to
// alpha_h or the round budget is exhausted. The objective is non-increasing
// across every half step; a violation beyond roundoff throws.
LocalSearchResult alternating_local_search(const Eigen::MatrixXd& phi_bar,
                                           const Eigen::MatrixXd& phi_low,
                                           std::vector<int> initial_labels,
                                           int kappa, double beta,
                                           double rho_l, double rho_u,
                                           double alpha_h, int max_rounds,
                                           double rule_tol, bool with_bias);

struct M3CResult {
    DecisionRule rule;
    LabelAssignment labels;
    std::vector<IterationRecord> history;
    double objective = 0.0;
    double sigma = 0.0;
    std::vector<double> grid_objectives;  // aligned with the candidate grid
    SolveStatus status = SolveStatus::numerical_error;
};

// Full pipeline at one kernel width, on a precomputed coarse graining.
M3CResult run_m3c_fixed_sigma(const TransitionPairSet& pairs,
                              const CoarsePairSet& coarse,
                              const M3CConfig& config, double sigma);

struct SigmaSearchResult {
    double sigma = 0.0;
    std::vector<double> objectives;  // one entry per candidate, NaN = failed
    std::vector<std::string> errors;
    M3CResult best;
};

// Runs the pipeline once per candidate width with identical seeds on a
// shared coarse graining and keeps the width with the smallest full
// objective.
SigmaSearchResult grid_search_sigma(const TransitionPairSet& pairs,
                                    const std::vector<double>& sigmas,
                                    const M3CConfig& config);

M3CResult run_m3c(const std::vector<Trajectory>& trajs,
                  const M3CConfig& config);

}  // namespace m3c
