#include "m3c/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace m3c {

namespace {

void validate(const MarginProblem& p) {
    const Eigen::Index n = p.size();
    if (n < 1) throw std::invalid_argument("MarginProblem: empty");
    if (p.kappa < 2) throw std::invalid_argument("MarginProblem: kappa >= 2");
    if (static_cast<Eigen::Index>(p.y.size()) != n)
        throw std::invalid_argument("MarginProblem: label size mismatch");
    if (p.weights.size() != n)
        throw std::invalid_argument("MarginProblem: weights size mismatch");
    if (p.pair_mode() && p.phi_low.rows() != n)
        throw std::invalid_argument("MarginProblem: phi_low row mismatch");
    if (p.beta <= 0.0) throw std::invalid_argument("MarginProblem: beta > 0");
    for (int label : p.y)
        if (label < 0 || label >= p.kappa)
            throw std::invalid_argument("MarginProblem: label out of range");
}

struct Top2 {
    int i1 = 0;
    double v1 = 0.0;
    int i2 = -1;
    double v2 = 0.0;
};

Top2 top2(const Eigen::MatrixXd& S, Eigen::Index row) {
    Top2 t;
    t.v1 = S(row, 0);
    t.v2 = -std::numeric_limits<double>::infinity();
    for (int k = 1; k < S.cols(); ++k) {
        const double v = S(row, k);
        if (v > t.v1) {
            t.v2 = t.v1;
            t.i2 = t.i1;
            t.v1 = v;
            t.i1 = k;
        } else if (v > t.v2) {
            t.v2 = v;
            t.i2 = k;
        }
    }
    return t;
}

// Most violated competitor of item `row` under label j; returns loss and the
// chosen class pair (kbar, klow) -- (j, j) when nothing is violated.
struct Violation {
    double loss = 0.0;
    int kbar = 0;
    int klow = 0;
};

Violation most_violated_pair(const Eigen::MatrixXd& Sbar,
                             const Eigen::MatrixXd& Slow, Eigen::Index row,
                             int j) {
    const Top2 tb = top2(Sbar, row);
    const Top2 tl = top2(Slow, row);
    int kbar = tb.i1, klow = tl.i1;
    double best = tb.v1 + tl.v1;
    if (kbar == j && klow == j) {
        // the exclusive best is the own pair; pick the better one-off swap
        const double alt_bar = tb.i2 >= 0 ? tb.v2 + tl.v1 : -1e300;
        const double alt_low = tl.i2 >= 0 ? tb.v1 + tl.v2 : -1e300;
        if (alt_bar >= alt_low) {
            kbar = tb.i2;
            best = alt_bar;
        } else {
            klow = tl.i2;
            best = alt_low;
        }
    }
    Violation v;
    v.loss = 1.0 + best - Sbar(row, j) - Slow(row, j);
    if (v.loss <= 0.0) {
        v.loss = 0.0;
        v.kbar = j;
        v.klow = j;
    } else {
        v.kbar = kbar;
        v.klow = klow;
    }
    return v;
}

Violation most_violated_point(const Eigen::MatrixXd& S, Eigen::Index row,
                              int j) {
    const Top2 t = top2(S, row);
    const int k = t.i1 == j ? t.i2 : t.i1;
    Violation v;
    if (k < 0) return v;
    v.loss = 1.0 + S(row, k) - S(row, j);
    if (v.loss <= 0.0) {
        v.loss = 0.0;
        v.kbar = j;
        v.klow = j;
    } else {
        v.kbar = k;
        v.klow = k;
    }
    return v;
}

Eigen::VectorXd slack_at(const MarginProblem& p, const Eigen::MatrixXd& Sbar,
                         const Eigen::MatrixXd& Slow) {
    Eigen::VectorXd xi(p.size());
    for (Eigen::Index n = 0; n < p.size(); ++n)
        xi(n) = p.pair_mode()
                    ? most_violated_pair(Sbar, Slow, n, p.y[n]).loss
                    : most_violated_point(Sbar, n, p.y[n]).loss;
    return xi;
}

// Dense N-slack quadratic program, exact for small instances.
RuleFit solve_small(const MarginProblem& p, double tol) {
    const Eigen::Index n = p.size();
    const Eigen::Index d = p.feature_dim();
    const int kappa = p.kappa;
    const Eigen::Index nb = p.with_bias ? kappa : 0;
    const Eigen::Index nw = kappa * d;
    const Eigen::Index nv = nw + nb + n;
    const int n_comp = p.pair_mode() ? kappa * kappa : kappa;

    QuadraticProgram qp;
    qp.Q = Eigen::MatrixXd::Zero(nv, nv);
    qp.Q.topLeftCorner(nw, nw).diagonal().setConstant(p.beta);
    qp.c = Eigen::VectorXd::Zero(nv);
    qp.c.tail(n) = p.weights;
    if (p.with_bias) {
        // offsets only enter through differences; pin their mean to zero so
        // the program has a unique solution
        qp.A = Eigen::MatrixXd::Zero(1, nv);
        qp.A.block(0, nw, 1, nb).setOnes();
        qp.b = Eigen::VectorXd::Zero(1);
    } else {
        qp.A.resize(0, nv);
        qp.b.resize(0);
    }

    const Eigen::Index rows = n * (n_comp - 1) + n;
    qp.G = Eigen::MatrixXd::Zero(rows, nv);
    qp.h = Eigen::VectorXd::Zero(rows);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = p.y[i];
        auto add_row = [&](int kbar, int klow) {
            auto wblock = [&](int k) { return qp.G.row(r).segment(k * d, d); };
            if (p.pair_mode()) {
                wblock(y) -= p.phi_bar.row(i);
                wblock(y) -= p.phi_low.row(i);
                wblock(kbar) += p.phi_bar.row(i);
                wblock(klow) += p.phi_low.row(i);
                if (p.with_bias) {
                    qp.G(r, nw + y) -= 2.0;
                    qp.G(r, nw + kbar) += 1.0;
                    qp.G(r, nw + klow) += 1.0;
                }
            } else {
                wblock(y) -= p.phi_bar.row(i);
                wblock(kbar) += p.phi_bar.row(i);
                if (p.with_bias) {
                    qp.G(r, nw + y) -= 1.0;
                    qp.G(r, nw + kbar) += 1.0;
                }
            }
            qp.G(r, nw + nb + i) = -1.0;
            qp.h(r) = -1.0;
            ++r;
        };
        if (p.pair_mode()) {
            for (int kbar = 0; kbar < kappa; ++kbar)
                for (int klow = 0; klow < kappa; ++klow)
                    if (!(kbar == y && klow == y)) add_row(kbar, klow);
        } else {
            for (int k = 0; k < kappa; ++k)
                if (k != y) add_row(k, k);
        }
        qp.G(r, nw + nb + i) = -1.0;  // xi_i >= 0
        qp.h(r) = 0.0;
        ++r;
    }

    QpResult sol = solve_qp(qp, std::clamp(tol * 0.1, 1e-10, 1e-8), 200);

    RuleFit fit;
    fit.status = sol.status;
    fit.W.resize(kappa, d);
    for (int k = 0; k < kappa; ++k)
        fit.W.row(k) = sol.x.segment(k * d, d).transpose();
    fit.b = p.with_bias ? sol.x.segment(nw, nb).eval()
                        : Eigen::VectorXd::Zero(kappa);
    const Eigen::MatrixXd Sbar = margin_scores(p.phi_bar, fit.W, fit.b);
    const Eigen::MatrixXd Slow =
        p.pair_mode() ? margin_scores(p.phi_low, fit.W, fit.b)
                      : Eigen::MatrixXd();
    fit.slack = slack_at(p, Sbar, Slow);
    fit.objective =
        0.5 * p.beta * fit.W.squaredNorm() + p.weights.dot(fit.slack);
    return fit;
}

// Constraint generation on the equivalent single-slack reformulation: each
// cut aggregates the currently most violated competitor per item. The
// master problems are small dense QPs.
RuleFit solve_large(const MarginProblem& p, double tol,
                    const Eigen::MatrixXd* warm_W,
                    const Eigen::VectorXd* warm_b) {
    const Eigen::Index n = p.size();
    const Eigen::Index d = p.feature_dim();
    const int kappa = p.kappa;
    const Eigen::Index nb = p.with_bias ? kappa : 0;
    const Eigen::Index nw = kappa * d;
    const Eigen::Index nv = nw + nb + 1;
    const int max_cuts = 600;

    Eigen::MatrixXd W = warm_W ? *warm_W : Eigen::MatrixXd::Zero(kappa, d);
    Eigen::VectorXd b = warm_b && p.with_bias ? *warm_b
                                              : Eigen::VectorXd::Zero(kappa);

    std::vector<Eigen::VectorXd> cut_rows;  // coefficients over (w, b)
    std::vector<double> cut_rhs;

    RuleFit best;
    best.objective = std::numeric_limits<double>::infinity();
    double xi_master = 0.0;

    for (int t = 0; t < max_cuts; ++t) {
        const Eigen::MatrixXd Sbar = margin_scores(p.phi_bar, W, b);
        const Eigen::MatrixXd Slow =
            p.pair_mode() ? margin_scores(p.phi_low, W, b) : Eigen::MatrixXd();
        Eigen::VectorXd xi(n);
        Eigen::VectorXd cut = Eigen::VectorXd::Zero(nw + nb);
        double rhs = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Violation v =
                p.pair_mode() ? most_violated_pair(Sbar, Slow, i, p.y[i])
                              : most_violated_point(Sbar, i, p.y[i]);
            xi(i) = v.loss;
            if (v.loss <= 0.0) continue;
            const double c = p.weights(i);
            const int y = p.y[i];
            if (p.pair_mode()) {
                cut.segment(y * d, d) -=
                    c * (p.phi_bar.row(i) + p.phi_low.row(i)).transpose();
                cut.segment(v.kbar * d, d) += c * p.phi_bar.row(i).transpose();
                cut.segment(v.klow * d, d) += c * p.phi_low.row(i).transpose();
                if (p.with_bias) {
                    cut(nw + y) -= 2.0 * c;
                    cut(nw + v.kbar) += c;
                    cut(nw + v.klow) += c;
                }
            } else {
                cut.segment(y * d, d) -= c * p.phi_bar.row(i).transpose();
                cut.segment(v.kbar * d, d) += c * p.phi_bar.row(i).transpose();
                if (p.with_bias) {
                    cut(nw + y) -= c;
                    cut(nw + v.kbar) += c;
                }
            }
            rhs -= c;
        }

        const double viol = p.weights.dot(xi);
        const double objective = 0.5 * p.beta * W.squaredNorm() + viol;
        if (objective < best.objective) {
            best.W = W;
            best.b = b;
            best.slack = xi;
            best.objective = objective;
            best.cuts = t;
        }
        const double eps = tol * std::max(1.0, std::abs(objective));
        if (t > 0 && viol <= xi_master + eps) {
            best.status = SolveStatus::optimal;
            return best;
        }

        cut_rows.push_back(cut);
        cut_rhs.push_back(rhs);

        QuadraticProgram qp;
        qp.Q = Eigen::MatrixXd::Zero(nv, nv);
        qp.Q.topLeftCorner(nw, nw).diagonal().setConstant(p.beta);
        qp.c = Eigen::VectorXd::Zero(nv);
        qp.c(nv - 1) = 1.0;
        if (p.with_bias) {
            qp.A = Eigen::MatrixXd::Zero(1, nv);
            qp.A.block(0, nw, 1, nb).setOnes();
            qp.b = Eigen::VectorXd::Zero(1);
        } else {
            qp.A.resize(0, nv);
            qp.b.resize(0);
        }
        const Eigen::Index rows = static_cast<Eigen::Index>(cut_rows.size()) + 1;
        qp.G = Eigen::MatrixXd::Zero(rows, nv);
        qp.h.resize(rows);
        for (Eigen::Index r = 0; r + 1 < rows; ++r) {
            qp.G.row(r).head(nw + nb) = cut_rows[r].transpose();
            qp.G(r, nv - 1) = -1.0;
            qp.h(r) = cut_rhs[r];
        }
        qp.G(rows - 1, nv - 1) = -1.0;  // xi >= 0
        qp.h(rows - 1) = 0.0;

        QpResult sol = solve_qp(qp, 1e-9, 200);
        if (sol.status != SolveStatus::optimal &&
            sol.status != SolveStatus::max_iterations) {
            best.status = sol.status;
            return best;
        }
        for (int k = 0; k < kappa; ++k)
            W.row(k) = sol.x.segment(k * d, d).transpose();
        if (p.with_bias) b = sol.x.segment(nw, nb);
        xi_master = sol.x(nv - 1);
    }

    best.status = SolveStatus::max_iterations;
    return best;
}

}  // namespace

Eigen::MatrixXd margin_scores(const Eigen::MatrixXd& phi,
                              const Eigen::MatrixXd& W,
                              const Eigen::VectorXd& b) {
    Eigen::MatrixXd S = phi * W.transpose();
    S.rowwise() += b.transpose();
    return S;
}

Eigen::MatrixXd margin_label_costs(const Eigen::MatrixXd& scores_bar,
                                   const Eigen::MatrixXd& scores_low,
                                   bool pair_mode) {
    const Eigen::Index n = scores_bar.rows();
    const int kappa = static_cast<int>(scores_bar.cols());
    Eigen::MatrixXd H(n, kappa);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (pair_mode) {
            const Top2 tb = top2(scores_bar, i);
            const Top2 tl = top2(scores_low, i);
            for (int j = 0; j < kappa; ++j) {
                double bestother;
                if (tb.i1 != j || tl.i1 != j) {
                    bestother = tb.v1 + tl.v1;
                } else {
                    const double alt_bar =
                        tb.i2 >= 0 ? tb.v2 + tl.v1 : -1e300;
                    const double alt_low =
                        tl.i2 >= 0 ? tb.v1 + tl.v2 : -1e300;
                    bestother = std::max(alt_bar, alt_low);
                }
                H(i, j) = std::max(
                    0.0, 1.0 + bestother - scores_bar(i, j) - scores_low(i, j));
            }
        } else {
            const Top2 t = top2(scores_bar, i);
            for (int j = 0; j < kappa; ++j) {
                const double bestother = t.i1 == j
                                             ? (t.i2 >= 0 ? t.v2 : -1e300)
                                             : t.v1;
                H(i, j) = std::max(0.0, 1.0 + bestother - scores_bar(i, j));
            }
        }
    }
    return H;
}

double margin_objective(const MarginProblem& p, const Eigen::MatrixXd& W,
                        const Eigen::VectorXd& b) {
    const Eigen::MatrixXd Sbar = margin_scores(p.phi_bar, W, b);
    const Eigen::MatrixXd Slow =
        p.pair_mode() ? margin_scores(p.phi_low, W, b) : Eigen::MatrixXd();
    return 0.5 * p.beta * W.squaredNorm() +
           p.weights.dot(slack_at(p, Sbar, Slow));
}

RuleFit solve_margin_qp(const MarginProblem& p, double tol,
                        const Eigen::MatrixXd* warm_W,
                        const Eigen::VectorXd* warm_b, MarginSolverPath path) {
    validate(p);
    if (path == MarginSolverPath::automatic) {
        const Eigen::Index n = p.size();
        const int n_comp = p.pair_mode() ? p.kappa * p.kappa : p.kappa;
        const Eigen::Index rows = n * n_comp;
        const Eigen::Index nv =
            p.kappa * p.feature_dim() + (p.with_bias ? p.kappa : 0) + n;
        // cost model: one interior-point step is O(rows * nv^2)
        const double cost = static_cast<double>(rows) * nv * nv;
        path = cost <= 1e8 ? MarginSolverPath::direct
                           : MarginSolverPath::cutting_plane;
    }
    if (path == MarginSolverPath::direct) return solve_small(p, tol);
    return solve_large(p, tol, warm_W, warm_b);
}

}  // namespace m3c
