#include "m3c/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace m3c {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_error: return "numerical_error";
    }
    return "unknown";
}

void validate(const QuadraticProgram& qp) {
    const Eigen::Index n = qp.num_vars();
    if (qp.Q.rows() != n || qp.Q.cols() != n)
        throw std::invalid_argument("QuadraticProgram: Q must be n x n");
    if (qp.A.rows() != qp.b.size() || (qp.A.rows() > 0 && qp.A.cols() != n))
        throw std::invalid_argument("QuadraticProgram: bad equality block");
    if (qp.G.rows() != qp.h.size() || (qp.G.rows() > 0 && qp.G.cols() != n))
        throw std::invalid_argument("QuadraticProgram: bad inequality block");
    const double scale = std::max(1.0, qp.Q.cwiseAbs().maxCoeff());
    if ((qp.Q - qp.Q.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument("QuadraticProgram: Q not symmetric");
    bool diagonal = true;
    for (Eigen::Index i = 0; i < n && diagonal; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && qp.Q(i, j) != 0.0) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        if (n > 0 && qp.Q.diagonal().minCoeff() < -1e-8 * scale)
            throw std::invalid_argument("QuadraticProgram: Q not PSD");
    } else if (n > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
            0.5 * (qp.Q + qp.Q.transpose()), Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
            throw std::invalid_argument("QuadraticProgram: Q not PSD");
    }
}

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    // largest alpha in (0,1] with v + alpha*dv >= 0
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    return alpha;
}

}  // namespace

QpResult solve_qp(const QuadraticProgram& qp, double tol, int max_iters) {
    validate(qp);
    const Eigen::Index n = qp.num_vars();
    const Eigen::Index p = qp.A.rows();
    const Eigen::Index m = qp.G.rows();

    QpResult res;

    // No inequalities: the KKT system is linear.
    if (m == 0) {
        Eigen::MatrixXd K(n + p, n + p);
        K.setZero();
        K.topLeftCorner(n, n) = qp.Q;
        K.topLeftCorner(n, n).diagonal().array() += 1e-12;
        if (p > 0) {
            K.topRightCorner(n, p) = qp.A.transpose();
            K.bottomLeftCorner(p, n) = qp.A;
            K.bottomRightCorner(p, p).diagonal().array() -= 1e-12;
        }
        Eigen::VectorXd rhs(n + p);
        rhs.head(n) = -qp.c;
        rhs.tail(p) = qp.b;
        Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
        res.x = sol.head(n);
        res.eq_dual = sol.tail(p);
        res.ineq_dual.resize(0);
        res.objective = 0.5 * res.x.dot(qp.Q * res.x) + qp.c.dot(res.x);
        Eigen::VectorXd rd = qp.Q * res.x + qp.c;
        if (p > 0) rd += qp.A.transpose() * res.eq_dual;
        res.kkt_residual = rd.cwiseAbs().maxCoeff();
        if (p > 0)
            res.kkt_residual = std::max(
                res.kkt_residual, (qp.A * res.x - qp.b).cwiseAbs().maxCoeff());
        res.status = res.kkt_residual < std::sqrt(tol)
                         ? SolveStatus::optimal
                         : SolveStatus::numerical_error;
        return res;
    }

    // Starting point: regularized equality-constrained solve for x, then
    // shift slacks into the positive orthant.
    Eigen::VectorXd x;
    {
        Eigen::MatrixXd K(n + p, n + p);
        K.setZero();
        K.topLeftCorner(n, n) = qp.Q;
        K.topLeftCorner(n, n).diagonal().array() += 1.0;
        if (p > 0) {
            K.topRightCorner(n, p) = qp.A.transpose();
            K.bottomLeftCorner(p, n) = qp.A;
        }
        Eigen::VectorXd rhs(n + p);
        rhs.head(n) = -qp.c;
        rhs.tail(p) = qp.b;
        x = K.partialPivLu().solve(rhs).head(n);
        if (!x.allFinite()) x = Eigen::VectorXd::Zero(n);
    }
    Eigen::VectorXd s = qp.h - qp.G * x;
    const double shift = std::max(1.0, -1.5 * s.minCoeff());
    s.array() += shift;
    Eigen::VectorXd z = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p);

    const double norm_c = std::max(1.0, qp.c.cwiseAbs().maxCoeff());
    const double norm_b = p > 0 ? std::max(1.0, qp.b.cwiseAbs().maxCoeff()) : 1.0;
    const double norm_h = std::max(1.0, qp.h.cwiseAbs().maxCoeff());

    Eigen::MatrixXd K(n + p, n + p);
    Eigen::VectorXd rhs(n + p);

    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::VectorXd rd = qp.Q * x + qp.c + qp.G.transpose() * z;
        if (p > 0) rd += qp.A.transpose() * y;
        Eigen::VectorXd rp = p > 0 ? (qp.A * x - qp.b).eval() : Eigen::VectorXd();
        Eigen::VectorXd rg = qp.G * x + s - qp.h;
        const double mu = s.dot(z) / m;

        res.objective = 0.5 * x.dot(qp.Q * x) + qp.c.dot(x);
        double worst = rd.cwiseAbs().maxCoeff() / norm_c;
        if (p > 0) worst = std::max(worst, rp.cwiseAbs().maxCoeff() / norm_b);
        worst = std::max(worst, rg.cwiseAbs().maxCoeff() / norm_h);
        const double gap = mu / std::max(1.0, std::abs(res.objective));
        res.kkt_residual = std::max(worst, gap);
        res.iterations = iter;
        if (res.kkt_residual <= tol) {
            res.status = SolveStatus::optimal;
            res.x = x;
            res.eq_dual = y;
            res.ineq_dual = z;
            return res;
        }
        if (!x.allFinite() || !s.allFinite() || !z.allFinite()) {
            res.status = SolveStatus::numerical_error;
            res.x = x;
            res.eq_dual = y;
            res.ineq_dual = z;
            return res;
        }
        if (z.cwiseAbs().maxCoeff() > 1e13 && worst > std::sqrt(tol)) {
            // dual blow-up with stalled primal residuals: declare infeasible
            res.status = SolveStatus::infeasible;
            res.x = x;
            res.eq_dual = y;
            res.ineq_dual = z;
            return res;
        }

        // KKT matrix shared by predictor and corrector; the regularization
        // is bumped and the factorization redone if a direction degenerates
        const Eigen::VectorXd w = z.cwiseQuotient(s);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        double reg = 1e-12;
        auto factorize = [&]() {
            K.setZero();
            K.topLeftCorner(n, n) =
                qp.Q + qp.G.transpose() * w.asDiagonal() * qp.G;
            K.topLeftCorner(n, n).diagonal().array() += reg;
            if (p > 0) {
                K.topRightCorner(n, p) = qp.A.transpose();
                K.bottomLeftCorner(p, n) = qp.A;
                K.bottomRightCorner(p, p).diagonal().array() -= reg;
            }
            lu.compute(K);
        };
        factorize();

        auto solve_direction = [&](const Eigen::VectorXd& rcomp,
                                   Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                                   Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
            rhs.head(n) =
                -rd - qp.G.transpose() *
                          ((z.cwiseProduct(rg) - rcomp).cwiseQuotient(s));
            if (p > 0) rhs.tail(p) = -rp;
            Eigen::VectorXd sol = lu.solve(rhs);
            while (!sol.allFinite() && reg < 1e-4) {
                reg *= 1e4;
                factorize();
                sol = lu.solve(rhs);
            }
            dx = sol.head(n);
            dy = sol.tail(p);
            ds = -rg - qp.G * dx;
            dz = (-rcomp - z.cwiseProduct(ds)).cwiseQuotient(s);
        };

        // predictor
        Eigen::VectorXd dx_a, dy_a, ds_a, dz_a;
        solve_direction(s.cwiseProduct(z), dx_a, dy_a, ds_a, dz_a);
        const double alpha_a =
            std::min(max_step(s, ds_a), max_step(z, dz_a));
        const double mu_aff =
            (s + alpha_a * ds_a).dot(z + alpha_a * dz_a) / m;
        const double sigma = std::pow(mu_aff / mu, 3);

        // corrector
        Eigen::VectorXd rcomp = s.cwiseProduct(z) +
                                ds_a.cwiseProduct(dz_a) -
                                Eigen::VectorXd::Constant(m, sigma * mu);
        Eigen::VectorXd dx, dy, ds, dz;
        solve_direction(rcomp, dx, dy, ds, dz);

        const double alpha =
            0.995 * std::min(max_step(s, ds), max_step(z, dz));
        x += alpha * dx;
        y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
    }

    res.status = SolveStatus::max_iterations;
    res.x = x;
    res.eq_dual = y;
    res.ineq_dual = z;
    res.objective = 0.5 * x.dot(qp.Q * x) + qp.c.dot(x);
    return res;
}

DualTransformResult dual_transform_check(const Eigen::MatrixXd& P,
                                         const Eigen::VectorXd& g,
                                         const Eigen::MatrixXd& E,
                                         const Eigen::VectorXd& f,
                                         double tol) {
    const Eigen::Index n = g.size();
    const Eigen::Index p = E.rows();

    DualTransformResult out;

    QuadraticProgram primal;
    primal.Q = P;
    primal.c = g;
    primal.A = E;
    primal.b = f;
    primal.G = -Eigen::MatrixXd::Identity(n, n);
    primal.h = Eigen::VectorXd::Zero(n);
    QpResult pr = solve_qp(primal, tol);
    out.primal_status = pr.status;
    out.primal_objective = pr.objective;

    // factor P = R R^T, dropping the numerically-zero eigenspace
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
    const double lam_max = n > 0 ? std::max(0.0, eig.eigenvalues().maxCoeff()) : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
        if (eig.eigenvalues()(i) > 1e-12 * std::max(1.0, lam_max))
            keep.push_back(i);
    Eigen::MatrixXd R(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        R.col(static_cast<Eigen::Index>(k)) =
            eig.eigenvectors().col(keep[k]) *
            std::sqrt(eig.eigenvalues()(keep[k]));
    const Eigen::Index r = R.cols();

    // min 1/2 theta^T theta - f^T alpha  s.t.  E^T alpha + R theta <= g
    QuadraticProgram dual;
    const Eigen::Index nv = p + r;
    dual.Q = Eigen::MatrixXd::Zero(nv, nv);
    dual.Q.bottomRightCorner(r, r).setIdentity();
    dual.c = Eigen::VectorXd::Zero(nv);
    dual.c.head(p) = -f;
    dual.A.resize(0, nv);
    dual.b.resize(0);
    dual.G.resize(n, nv);
    dual.G.leftCols(p) = E.transpose();
    dual.G.rightCols(r) = R;
    dual.h = g;
    QpResult du = solve_qp(dual, tol);
    out.dual_status = du.status;
    out.dual_objective = -du.objective;  // max value of the dual
    return out;
}

}  // namespace m3c
