#pragma once

#include <Eigen/Dense>

#include "m3c/coarse.hpp"
#include "m3c/features.hpp"

namespace m3c {

// Class-pair selector matrix. Each column selects a competitor: column j is
// (e_i; e_k) meaning "upper member scored against class i, lower against
// class k". The first kappa columns are the diagonal pairs (e_k; e_k); the
// remaining kappa^2-kappa columns enumerate off-diagonal (i,k), i != k, in
// row-major order. The single-class variant (used by plain point
// clustering) has Bbar = I and Blow = 0.
struct SelectorBasis {
    Eigen::MatrixXd Bbar;  // kappa x m
    Eigen::MatrixXd Blow;  // kappa x m
    int kappa = 0;

    Eigen::Index cols() const { return Bbar.cols(); }
};

SelectorBasis build_B(int kappa);
SelectorBasis single_class_basis(int kappa);

// Data of the fixed-label dual problem for the coarse-grained margin
// program: Gram blocks of the upper/lower feature rows, their sum, the dual
// quadratic form (a Kronecker sum over selector products), its PSD factor
// R with R R^T = hessian / beta, and the affine map D -> q(D).
struct DualData {
    SelectorBasis basis;
    Eigen::MatrixXd K11, K12, K21, K22;  // feature Gram blocks, N^c x N^c
    Eigen::MatrixXd Ks;                  // K11 + K12 + K21 + K22
    Eigen::VectorXd weights;             // bin weights c
    double beta = 0.0;
    Eigen::MatrixXd hessian;             // (m N^c) x (m N^c)
    Eigen::MatrixXd R;                   // PSD factor of hessian / beta

    Eigen::Index n_bins() const { return K11.rows(); }

    // q(D) as an N^c x m matrix; vec(q) is column-major.
    Eigen::MatrixXd q_of(const Eigen::MatrixXd& D) const;
    Eigen::VectorXd q_vec(const Eigen::MatrixXd& D) const;
    // The matrix of the linear map vec(D) -> vec(q(D)).
    Eigen::MatrixXd q_operator() const;
};

DualData assemble_dual_data(const Eigen::MatrixXd& phi_bar,
                            const Eigen::MatrixXd& phi_low,
                            const SelectorBasis& basis,
                            const Eigen::VectorXd& weights, double beta,
                            double rank_tol = 1e-10);

// Convenience overload: features of the coarse pair centers under a map.
DualData assemble_dual_data(const CoarsePairSet& coarse, const FeatureMap& map,
                            int kappa, double beta);

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace m3c
