#pragma once

#include <Eigen/Dense>

namespace m3c {

enum class SolveStatus {
    optimal,
    max_iterations,
    infeasible,
    unbounded,
    numerical_error,
};

const char* to_string(SolveStatus status);

// Convex quadratic program
//   min 1/2 x^T Q x + c^T x   s.t.  A x = b,  G x <= h
// with Q symmetric positive semidefinite. Empty constraint blocks are
// expressed by 0-row matrices.
struct QuadraticProgram {
    Eigen::MatrixXd Q;
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;

    Eigen::Index num_vars() const { return c.size(); }
};

// Throws std::invalid_argument on inconsistent dimensions or if Q fails the
// symmetric-PSD check (tolerance 1e-8 relative).
void validate(const QuadraticProgram& qp);

struct QpResult {
    SolveStatus status = SolveStatus::numerical_error;
    Eigen::VectorXd x;
    Eigen::VectorXd eq_dual;    // multipliers for A x = b
    Eigen::VectorXd ineq_dual;  // multipliers for G x <= h, nonnegative
    double objective = 0.0;
    double kkt_residual = 0.0;  // worst scaled residual incl. duality gap
    int iterations = 0;
};

// Dense primal-dual interior point method (Mehrotra predictor-corrector).
// Intended for small dense problems; cost is one (n+p) LU factorization per
// iteration.
QpResult solve_qp(const QuadraticProgram& qp, double tol = 1e-8,
                  int max_iters = 100);

// Checks the strong-duality transform for programs of the form
//   min 1/2 x^T P x + g^T x  s.t.  E x = f,  x >= 0
// with P = R R^T: solves the primal directly and the transformed problem
//   min 1/2 theta^T theta - f^T alpha  s.t.  g - E^T alpha - R theta >= 0
// and returns both optima (they coincide for feasible instances).
struct DualTransformResult {
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    SolveStatus primal_status = SolveStatus::numerical_error;
    SolveStatus dual_status = SolveStatus::numerical_error;
};

DualTransformResult dual_transform_check(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& g,
                                         const Eigen::MatrixXd& E,
                                         const Eigen::VectorXd& f,
                                         double tol = 1e-9);

}  // namespace m3c
