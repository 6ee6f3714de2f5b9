#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <filesystem>
#include <vector>

#include "m3c/qp.hpp"

namespace m3c {

// Cone layout of the slack vector in  A x + s = b,  s in K. Rows are ordered
// zero, nonneg, box, second-order, PSD. Box rows mean s_i in [0,1] and are
// lowered to two nonnegative rows inside the solver. PSD blocks are stored
// in scaled-vector (svec) form: upper triangle, column-major, off-diagonal
// entries multiplied by sqrt(2).
struct ConeSpec {
    Eigen::Index zero = 0;
    Eigen::Index nonneg = 0;
    Eigen::Index box = 0;
    std::vector<Eigen::Index> soc;  // cone dimensions
    std::vector<Eigen::Index> psd;  // matrix side lengths

    Eigen::Index total_rows() const;
};

struct ConeProgram {
    Eigen::VectorXd c;               // objective, min c^T x
    Eigen::SparseMatrix<double> A;   // m x n
    Eigen::VectorXd b;
    ConeSpec cones;
};

void validate(const ConeProgram& cp);

struct ConeResult {
    SolveStatus status = SolveStatus::numerical_error;
    Eigen::VectorXd x;
    Eigen::VectorXd y;  // dual, box rows report the combined multiplier
    Eigen::VectorXd s;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

// First-order operator-splitting solver over the homogeneous self-dual
// embedding. Each iteration is one cached linear solve plus a projection
// onto the product cone (PSD blocks via eigendecomposition).
ConeResult solve_cone(const ConeProgram& cp, double tol = 1e-6,
                      int max_iters = 50000);

// svec packing helpers shared with the relaxation assembly.
Eigen::Index svec_dim(Eigen::Index side);
Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, Eigen::Index side);

// Factor (1/beta) P = R R^T for symmetric PSD P, dropping eigenvalues below
// rank_tol * lambda_max, so R has full column rank equal to the numerical
// rank. Throws if P is indefinite beyond tolerance.
Eigen::MatrixXd factor_psd(const Eigen::MatrixXd& P, double beta,
                           double rank_tol = 1e-10);

// Plain-text dump/load of a cone program for debugging against external
// solvers.
void write_cone_program(const ConeProgram& cp, const std::filesystem::path& path);
ConeProgram read_cone_program(const std::filesystem::path& path);

}  // namespace m3c
