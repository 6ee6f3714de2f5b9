#include "m3c/dual.hpp"

#include <stdexcept>

#include "m3c/cone.hpp"

namespace m3c {

SelectorBasis build_B(int kappa) {
    if (kappa < 2) throw std::invalid_argument("build_B: kappa must be >= 2");
    const int m = kappa * kappa;
    SelectorBasis basis;
    basis.kappa = kappa;
    basis.Bbar = Eigen::MatrixXd::Zero(kappa, m);
    basis.Blow = Eigen::MatrixXd::Zero(kappa, m);
    int col = 0;
    for (int k = 0; k < kappa; ++k, ++col) {
        basis.Bbar(k, col) = 1.0;
        basis.Blow(k, col) = 1.0;
    }
    for (int i = 0; i < kappa; ++i)
        for (int j = 0; j < kappa; ++j) {
            if (i == j) continue;
            basis.Bbar(i, col) = 1.0;
            basis.Blow(j, col) = 1.0;
            ++col;
        }
    return basis;
}

SelectorBasis single_class_basis(int kappa) {
    if (kappa < 2)
        throw std::invalid_argument("single_class_basis: kappa must be >= 2");
    SelectorBasis basis;
    basis.kappa = kappa;
    basis.Bbar = Eigen::MatrixXd::Identity(kappa, kappa);
    basis.Blow = Eigen::MatrixXd::Zero(kappa, kappa);
    return basis;
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) =
                A(i, j) * B;
    return K;
}

Eigen::MatrixXd DualData::q_of(const Eigen::MatrixXd& D) const {
    const Eigen::Index nc = n_bins();
    const Eigen::Index m = basis.cols();
    if (D.rows() != nc || D.cols() != basis.kappa)
        throw std::invalid_argument("q_of: D has wrong shape");
    Eigen::MatrixXd CD = weights.asDiagonal() * D;
    Eigen::MatrixXd q = (1.0 / beta) * ((K11 + K21).transpose() * CD * basis.Bbar +
                                        (K12 + K22).transpose() * CD * basis.Blow);
    q.leftCols(basis.kappa) -= D;  // the indicator block sits on the
                                   // diagonal-selector columns
    (void)m;
    return q;
}

Eigen::VectorXd DualData::q_vec(const Eigen::MatrixXd& D) const {
    Eigen::MatrixXd q = q_of(D);
    return Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());
}

Eigen::MatrixXd DualData::q_operator() const {
    const Eigen::Index nc = n_bins();
    const int kappa = basis.kappa;
    Eigen::MatrixXd op(nc * basis.cols(), nc * kappa);
    Eigen::MatrixXd basis_vec = Eigen::MatrixXd::Zero(nc, kappa);
    for (int j = 0; j < kappa; ++j)
        for (Eigen::Index i = 0; i < nc; ++i) {
            basis_vec(i, j) = 1.0;
            op.col(j * nc + i) = q_vec(basis_vec);
            basis_vec(i, j) = 0.0;
        }
    return op;
}

DualData assemble_dual_data(const Eigen::MatrixXd& phi_bar,
                            const Eigen::MatrixXd& phi_low,
                            const SelectorBasis& basis,
                            const Eigen::VectorXd& weights, double beta,
                            double rank_tol) {
    const Eigen::Index nc = phi_bar.rows();
    if (nc < 1) throw std::invalid_argument("assemble_dual_data: empty set");
    if (phi_low.rows() != nc)
        throw std::invalid_argument("assemble_dual_data: block row mismatch");
    if (weights.size() != nc)
        throw std::invalid_argument("assemble_dual_data: weights size");
    if (beta <= 0.0) throw std::invalid_argument("assemble_dual_data: beta");

    DualData dual;
    dual.basis = basis;
    dual.weights = weights;
    dual.beta = beta;
    dual.K11 = phi_bar * phi_bar.transpose();
    dual.K12 = phi_bar * phi_low.transpose();
    dual.K21 = dual.K12.transpose();
    dual.K22 = phi_low * phi_low.transpose();
    dual.Ks = dual.K11 + dual.K12 + dual.K21 + dual.K22;

    dual.hessian =
        kronecker(basis.Bbar.transpose() * basis.Bbar, dual.K11) +
        kronecker(basis.Bbar.transpose() * basis.Blow, dual.K12) +
        kronecker(basis.Blow.transpose() * basis.Bbar, dual.K21) +
        kronecker(basis.Blow.transpose() * basis.Blow, dual.K22);
    dual.R = factor_psd(dual.hessian, beta, rank_tol);
    return dual;
}

DualData assemble_dual_data(const CoarsePairSet& coarse, const FeatureMap& map,
                            int kappa, double beta) {
    const Eigen::MatrixXd phi_bar = map.apply_rows(coarse.centers.first);
    const Eigen::MatrixXd phi_low = map.apply_rows(coarse.centers.second);
    return assemble_dual_data(phi_bar, phi_low, build_B(kappa), coarse.weights,
                              beta);
}

}  // namespace m3c
