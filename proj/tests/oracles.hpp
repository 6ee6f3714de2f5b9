#pragma once

// Test-only reference implementations, kept independent of the library
// paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "m3c/qp.hpp"

namespace oracles {

// Projected gradient descent for  min 1/2 x^T Q x + c^T x  s.t. x >= lb.
inline Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& Q,
                                             const Eigen::VectorXd& c,
                                             const Eigen::VectorXd& lb,
                                             int iters = 200000) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q);
    const double lip = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lip;
    Eigen::VectorXd x = lb.cwiseMax(Eigen::VectorXd::Zero(c.size()));
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd g = Q * x + c;
        Eigen::VectorXd next = (x - step * g).cwiseMax(lb);
        if ((next - x).lpNorm<Eigen::Infinity>() < 1e-12) return next;
        x = next;
    }
    return x;
}

// Exhaustive solve of the capacity-window assignment problem.
struct BruteAssignment {
    std::vector<int> labels;
    double objective = std::numeric_limits<double>::infinity();
};

inline BruteAssignment brute_force_assignment(const Eigen::MatrixXd& cost,
                                              long lo, long hi) {
    const int n = static_cast<int>(cost.rows());
    const int kappa = static_cast<int>(cost.cols());
    BruteAssignment best;
    std::vector<int> labels(n, 0);
    for (;;) {
        std::vector<long> counts(kappa, 0);
        for (int v : labels) ++counts[v];
        bool ok = true;
        for (int k = 0; k < kappa; ++k)
            if (counts[k] < lo || counts[k] > hi) ok = false;
        if (ok) {
            double obj = 0.0;
            for (int i = 0; i < n; ++i) obj += cost(i, labels[i]);
            if (obj < best.objective) {
                best.objective = obj;
                best.labels = labels;
            }
        }
        int pos = n - 1;
        while (pos >= 0 && labels[pos] == kappa - 1) labels[pos--] = 0;
        if (pos < 0) break;
        ++labels[pos];
    }
    return best;
}

// Direct central finite differences of a scalar field on R^2.
template <typename F>
Eigen::Vector2d central_difference(const F& f, const Eigen::Vector2d& x,
                                   double h = 1e-6) {
    Eigen::Vector2d g;
    for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d lo = x, hi = x;
        lo(i) -= h;
        hi(i) += h;
        g(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

// The fixed-label coarse margin program built directly from its definition
// (weights c, offsets pinned to zero), solved as a dense QP: variables are
// the kappa weight blocks followed by the slacks.
inline double coarse_fixed_label_optimum(const Eigen::MatrixXd& phi_bar,
                                         const Eigen::MatrixXd& phi_low,
                                         const std::vector<int>& labels,
                                         const Eigen::VectorXd& weights,
                                         int kappa, double beta) {
    const Eigen::Index nc = phi_bar.rows();
    const Eigen::Index d = phi_bar.cols();
    const Eigen::Index nv = kappa * d + nc;

    m3c::QuadraticProgram qp;
    qp.Q = Eigen::MatrixXd::Zero(nv, nv);
    qp.Q.topLeftCorner(kappa * d, kappa * d).diagonal().setConstant(beta);
    qp.c = Eigen::VectorXd::Zero(nv);
    qp.c.tail(nc) = weights;
    qp.A.resize(0, nv);
    qp.b.resize(0);
    const Eigen::Index rows = nc * kappa * kappa;
    qp.G = Eigen::MatrixXd::Zero(rows, nv);
    qp.h.resize(rows);
    Eigen::Index r = 0;
    for (Eigen::Index n = 0; n < nc; ++n) {
        const int y = labels[n];
        for (int kb = 0; kb < kappa; ++kb)
            for (int kl = 0; kl < kappa; ++kl) {
                // (w_yy - w_{kb,kl}) . phi(pair) + 1_{y=kb=kl} >= 1 - xi_n
                qp.G.row(r).segment(y * d, d) -=
                    phi_bar.row(n) + phi_low.row(n);
                qp.G.row(r).segment(kb * d, d) += phi_bar.row(n);
                qp.G.row(r).segment(kl * d, d) += phi_low.row(n);
                qp.G(r, kappa * d + n) = -1.0;
                qp.h(r) = (kb == y && kl == y) ? 0.0 : -1.0;
                ++r;
            }
    }
    const m3c::QpResult sol = m3c::solve_qp(qp, 1e-10, 200);
    return sol.objective;
}

}  // namespace oracles
