#pragma once

#include <Eigen/Dense>
#include <vector>

namespace m3c {

// Lag-tau transition matrix between metastable states, estimated by
// row-normalized transition counts.
struct TransitionMatrix {
    Eigen::MatrixXd P;       // kappa x kappa, row-stochastic
    Eigen::MatrixXd counts;  // kappa x kappa
    double tau = 0.0;

    int kappa() const { return static_cast<int>(P.rows()); }
};

// Counts (y_t, y_{t+tau/dt}) over all sequences. tau must be an integer
// multiple of dt; throws if some state is never left (zero count row),
// naming the states.
TransitionMatrix estimate_transition_matrix(
    const std::vector<std::vector<int>>& label_seqs, double dt, double tau,
    int kappa);

// Metastability score: sum of diagonal transition probabilities, in
// [0, kappa].
double q_metric(const TransitionMatrix& tm);

struct TimescaleReport {
    std::vector<double> taus;
    Eigen::MatrixXd its;  // n_tau x (kappa - 1), sentinel 0 outside (0,1)
    std::vector<Eigen::VectorXd> eigenvalues;  // real parts, modulus order
};

// ITS_i(tau) = -tau / ln(lambda_i(tau)) for i = 2..kappa, eigenvalues
// sorted by modulus descending and taken by real part; entries outside
// (0,1) map to the sentinel 0.
TimescaleReport implied_timescales(
    const std::vector<std::vector<int>>& label_seqs, double dt,
    const std::vector<double>& taus, int kappa);

struct ClusteringErrorResult {
    double error = 0.0;
    std::vector<int> permutation;  // permutation[predicted] = matched label
};

// Misclassification rate minimized over all label permutations. The
// returned permutation can be reapplied to held-out data so train and test
// errors use one identification.
ClusteringErrorResult clustering_error(const std::vector<int>& truth,
                                       const std::vector<int>& predicted,
                                       int kappa);

double labeling_error_under_permutation(const std::vector<int>& truth,
                                        const std::vector<int>& predicted,
                                        const std::vector<int>& permutation);

}  // namespace m3c
