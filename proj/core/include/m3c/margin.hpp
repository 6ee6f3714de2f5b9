#pragma once

#include <Eigen/Dense>
#include <vector>

#include "m3c/qp.hpp"

namespace m3c {

// Fixed-label large-margin subproblem shared by the pair clustering and the
// plain point clustering baseline:
//   min 1/2 beta |W|^2 + sum_n c_n xi_n
//   s.t. score_n(y_n) - score_n(comp) + 1_{comp = y_n} >= 1 - xi_n
// where in pair mode score_n(kbar,klow) = w_kbar^T phibar_n + w_klow^T
// philow_n + b_kbar + b_klow and the competitor set is all class pairs; in
// point mode (philow empty) the competitors are the kappa classes.
struct MarginProblem {
    Eigen::MatrixXd phi_bar;  // N x d
    Eigen::MatrixXd phi_low;  // N x d, or 0 columns for point mode
    std::vector<int> y;       // 0-based labels
    int kappa = 2;
    Eigen::VectorXd weights;  // c_n > 0
    double beta = 0.01;
    bool with_bias = true;    // include offsets b

    bool pair_mode() const { return phi_low.size() > 0; }
    Eigen::Index size() const { return phi_bar.rows(); }
    Eigen::Index feature_dim() const { return phi_bar.cols(); }
};

struct RuleFit {
    Eigen::MatrixXd W;       // kappa x d
    Eigen::VectorXd b;       // kappa (zero when !with_bias)
    Eigen::VectorXd slack;   // optimal per-item slack at (W, b)
    double objective = 0.0;  // 1/2 beta |W|^2 + weights . slack
    SolveStatus status = SolveStatus::numerical_error;
    int cuts = 0;            // constraint-generation rounds on the large path
};

enum class MarginSolverPath { automatic, direct, cutting_plane };

// Exact solve. Small instances go through the dense N-slack quadratic
// program; large ones through an equivalent single-slack constraint
// generation whose master problems are solved by solve_qp. An optional
// previous rule warm-starts the cut pool.
RuleFit solve_margin_qp(const MarginProblem& problem, double tol = 1e-7,
                        const Eigen::MatrixXd* warm_W = nullptr,
                        const Eigen::VectorXd* warm_b = nullptr,
                        MarginSolverPath path = MarginSolverPath::automatic);

// Decision scores: S(n,k) = w_k . phi_n (+ b_k).
Eigen::MatrixXd margin_scores(const Eigen::MatrixXd& phi,
                              const Eigen::MatrixXd& W,
                              const Eigen::VectorXd& b);

// Per-item relabeling costs H (N x kappa): H(n,j) is the hinge loss item n
// would incur under label j with the rule fixed. Row minima are attained at
// nonnegative values since the own-class competitor contributes zero.
Eigen::MatrixXd margin_label_costs(const Eigen::MatrixXd& scores_bar,
                                   const Eigen::MatrixXd& scores_low,
                                   bool pair_mode);

// Objective of the clustering program at fixed labels and rule.
double margin_objective(const MarginProblem& problem, const Eigen::MatrixXd& W,
                        const Eigen::VectorXd& b);

}  // namespace m3c
