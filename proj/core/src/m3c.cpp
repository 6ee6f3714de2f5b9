#include "m3c/m3c.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "m3c/assignment.hpp"
#include "m3c/cone.hpp"
#include "m3c/rng.hpp"
#include "m3c/spectral.hpp"

namespace m3c {

std::vector<double> M3CConfig::sigmas() const {
    return sigma_grid.empty() ? default_sigma_grid() : sigma_grid;
}

void validate(const M3CConfig& config) {
    if (config.kappa < 2)
        throw std::invalid_argument("M3CConfig: kappa must be >= 2");
    if (config.beta <= 0.0)
        throw std::invalid_argument("M3CConfig: beta must be positive");
    if (!(0.0 < config.rho_l && config.rho_l < 1.0 / config.kappa &&
          1.0 / config.kappa < config.rho_u && config.rho_u < 1.0))
        throw std::invalid_argument(
            "M3CConfig: need 0 < rho_l < 1/kappa < rho_u < 1");
    if (config.n_bins <= config.kappa)
        throw std::invalid_argument("M3CConfig: n_bins must exceed kappa");
    if (config.feature_dim < 1)
        throw std::invalid_argument("M3CConfig: feature_dim >= 1");
    if (config.alpha_h < 0.0)
        throw std::invalid_argument("M3CConfig: alpha_h >= 0");
    if (config.max_rounds < 1)
        throw std::invalid_argument("M3CConfig: max_rounds >= 1");
    for (double s : config.sigmas())
        if (s <= 0.0) throw std::invalid_argument("M3CConfig: sigma > 0");
}

RelaxationSolution solve_relaxation(const DualData& dual, double rho_l,
                                    double rho_u, double tol, int max_iters,
                                    double centering) {
    const Eigen::Index nc = dual.n_bins();
    const int kappa = dual.basis.kappa;
    const Eigen::Index m = dual.basis.cols();
    const Eigen::Index r = dual.R.cols();
    const Eigen::VectorXd& c = dual.weights;

    // variable layout: M upper triangle | vec(D) | alpha | theta | zeta
    // (| centering epigraph t when requested)
    const Eigen::Index nut = nc * (nc + 1) / 2;
    const Eigen::Index oD = nut;
    const Eigen::Index oA = oD + nc * kappa;
    const Eigen::Index oT = oA + nc;
    const Eigen::Index oZ = oT + r;
    const Eigen::Index oC = oZ + 1;
    const Eigen::Index nv = centering > 0.0 ? oC + 1 : oC;

    auto ut = [nc](Eigen::Index i, Eigen::Index j) {
        if (i > j) std::swap(i, j);
        return j * (j + 1) / 2 + i;
    };

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::Index row = 0;
    std::vector<double> rhs;
    auto push = [&](Eigen::Index col, double v) {
        if (v != 0.0)
            trips.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
    };
    auto next_row = [&](double b) {
        rhs.push_back(b);
        ++row;
    };

    // zero cone: diag(M) = 1
    for (Eigen::Index i = 0; i < nc; ++i) {
        push(ut(i, i), 1.0);
        next_row(1.0);
    }
    // zero cone: rows of D sum to 1. Implied by the relation-matrix
    // structure of integer solutions but lost by the Schur relaxation;
    // without it D collapses to zero and M decouples from the margin dual.
    for (Eigen::Index i = 0; i < nc; ++i) {
        for (int j = 0; j < kappa; ++j) push(oD + j * nc + i, 1.0);
        next_row(1.0);
    }

    // nonneg: q(D) + (1 (x) I) alpha + R theta <= 0
    const Eigen::MatrixXd Gq = dual.q_operator();
    for (Eigen::Index k = 0; k < m * nc; ++k) {
        for (Eigen::Index col = 0; col < nc * kappa; ++col)
            push(oD + col, Gq(k, col));
        push(oA + (k % nc), 1.0);
        for (Eigen::Index t = 0; t < r; ++t) push(oT + t, dual.R(k, t));
        next_row(0.0);
    }
    // nonneg: (M c)_i - rho_l >= 0
    for (Eigen::Index i = 0; i < nc; ++i) {
        for (Eigen::Index j = 0; j < nc; ++j) push(ut(i, j), -c(j));
        next_row(-rho_l);
    }
    // nonneg: rho_u - (M c)_i >= 0
    for (Eigen::Index i = 0; i < nc; ++i) {
        for (Eigen::Index j = 0; j < nc; ++j) push(ut(i, j), c(j));
        next_row(rho_u);
    }
    // nonneg: class masses D^T c within the same window (valid for every
    // integer labeling, tightens the relaxation)
    for (int j = 0; j < kappa; ++j) {
        for (Eigen::Index i = 0; i < nc; ++i) push(oD + j * nc + i, -c(i));
        next_row(-rho_l);
    }
    for (int j = 0; j < kappa; ++j) {
        for (Eigen::Index i = 0; i < nc; ++i) push(oD + j * nc + i, c(i));
        next_row(rho_u);
    }

    // box [0,1]: off-diagonal entries of M, all entries of D
    for (Eigen::Index j = 0; j < nc; ++j)
        for (Eigen::Index i = 0; i < j; ++i) {
            push(ut(i, j), -1.0);
            next_row(0.0);
        }
    for (Eigen::Index col = 0; col < nc * kappa; ++col) {
        push(oD + col, -1.0);
        next_row(0.0);
    }

    // second-order cone for the quadratic theta term:
    //   sigma = 2 zeta + 2 c^T alpha + (1/beta) tr(M C Ks C) - 2 1^T c
    //   |(2 theta; sigma - 1)| <= sigma + 1
    const Eigen::MatrixXd Wt =
        c.asDiagonal() * dual.Ks * c.asDiagonal();
    const double sigma_const = -2.0 * c.sum();
    auto push_sigma = [&](double scale) {
        push(oZ, -2.0 * scale);
        for (Eigen::Index i = 0; i < nc; ++i) push(oA + i, -2.0 * c(i) * scale);
        for (Eigen::Index j = 0; j < nc; ++j)
            for (Eigen::Index i = 0; i <= j; ++i)
                push(ut(i, j),
                     -scale * Wt(i, j) * (i == j ? 1.0 : 2.0) / dual.beta);
    };
    push_sigma(1.0);
    next_row(sigma_const + 1.0);
    for (Eigen::Index t = 0; t < r; ++t) {
        push(oT + t, -2.0);
        next_row(0.0);
    }
    push_sigma(1.0);
    next_row(sigma_const - 1.0);

    // second-order cone for the centering epigraph: t >= |M|_F^2
    static const double rt2_c = std::sqrt(2.0);
    if (centering > 0.0) {
        push(oC, -1.0);
        next_row(1.0);
        for (Eigen::Index j = 0; j < nc; ++j)
            for (Eigen::Index i = 0; i <= j; ++i) {
                push(ut(i, j), i == j ? -2.0 : -2.0 * rt2_c);
                next_row(0.0);
            }
        push(oC, -1.0);
        next_row(-1.0);
    }

    // PSD block [[I, D^T], [D, M]] of side kappa + nc
    const Eigen::Index side = kappa + nc;
    static const double rt2 = std::sqrt(2.0);
    for (Eigen::Index q = 0; q < side; ++q)
        for (Eigen::Index p = 0; p <= q; ++p) {
            const double scale = p == q ? 1.0 : rt2;
            if (q < kappa) {
                next_row(p == q ? 1.0 : 0.0);
            } else if (p < kappa) {
                push(oD + p * nc + (q - kappa), -scale);
                next_row(0.0);
            } else {
                push(ut(p - kappa, q - kappa), -scale);
                next_row(0.0);
            }
        }

    ConeProgram cp;
    cp.c = Eigen::VectorXd::Zero(nv);
    cp.c(oZ) = 1.0;
    if (centering > 0.0) cp.c(oC) = centering;
    cp.A.resize(row, nv);
    cp.A.setFromTriplets(trips.begin(), trips.end());
    cp.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), row);
    cp.cones.zero = 2 * nc;
    cp.cones.nonneg = m * nc + 2 * nc + 2 * kappa;
    cp.cones.box = (nut - nc) + nc * kappa;
    cp.cones.soc = {r + 2};
    if (centering > 0.0) cp.cones.soc.push_back(nut + 2);
    cp.cones.psd = {side};

    ConeResult sol = solve_cone(cp, tol, max_iters);

    RelaxationSolution out;
    out.status = sol.status;
    out.primal_residual = sol.primal_residual;
    out.dual_residual = sol.dual_residual;
    out.gap = sol.gap;
    out.iterations = sol.iterations;
    if (sol.x.size() != nv) return out;
    out.M.resize(nc, nc);
    for (Eigen::Index j = 0; j < nc; ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            out.M(i, j) = out.M(j, i) = sol.x(ut(i, j));
    out.D.resize(nc, kappa);
    for (int j = 0; j < kappa; ++j)
        for (Eigen::Index i = 0; i < nc; ++i) out.D(i, j) = sol.x(oD + j * nc + i);
    out.alpha = sol.x.segment(oA, nc);
    out.theta = sol.x.segment(oT, r);
    out.zeta = sol.x(oZ);
    return out;
}

std::vector<int> recover_coarse_labels(const Eigen::MatrixXd& M, int kappa,
                                       std::uint64_t seed,
                                       int kmeans_restarts) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("recover_coarse_labels: M not square");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() >
        1e-6 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("recover_coarse_labels: M not symmetric");
    return spectral_cluster(M, kappa, seed, kmeans_restarts);
}

std::vector<int> kinetic_bin_labels(const TransitionPairSet& pairs,
                                    const CoarsePairSet& coarse, int kappa,
                                    std::uint64_t seed, int kmeans_restarts) {
    const Eigen::Index nc = coarse.size();
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nc, nc);
    for (Eigen::Index n = 0; n + 1 < pairs.size(); ++n) {
        // pair n+1 continues pair n iff they share the middle sample
        if (pairs.second.row(n) == pairs.first.row(n + 1))
            counts(coarse.bin_of_pair[n], coarse.bin_of_pair[n + 1]) += 1.0;
    }
    Eigen::MatrixXd P(nc, nc);
    for (Eigen::Index i = 0; i < nc; ++i) {
        const double row = counts.row(i).sum();
        if (row > 0.0) {
            P.row(i) = counts.row(i) / row;
        } else {
            P.row(i).setZero();
            P(i, i) = 1.0;
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> eig(P);
    std::vector<Eigen::Index> order(nc);
    std::iota(order.begin(), order.end(), 0);
    const auto& vals = eig.eigenvalues();
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(vals(a)) > std::abs(vals(b));
    });
    Eigen::MatrixXd embed(nc, kappa);
    for (int c = 0; c < kappa; ++c)
        for (Eigen::Index i = 0; i < nc; ++i)
            embed(i, c) = eig.eigenvectors()(i, order[c]).real();
    return kmeans(embed, kappa, kmeans_restarts, seed).labels;
}

std::vector<int> lift_labels(const std::vector<int>& coarse_labels,
                             const std::vector<int>& bin_of_pair) {
    std::vector<int> y(bin_of_pair.size());
    for (std::size_t n = 0; n < bin_of_pair.size(); ++n) {
        const int bin = bin_of_pair[n];
        if (bin < 0 || bin >= static_cast<int>(coarse_labels.size()))
            throw std::invalid_argument("lift_labels: unmapped pair");
        y[n] = coarse_labels[bin];
    }
    return y;
}

namespace {

MarginProblem make_pair_problem(const Eigen::MatrixXd& phi_bar,
                                const Eigen::MatrixXd& phi_low,
                                const std::vector<int>& y, int kappa,
                                double beta) {
    MarginProblem p;
    p.phi_bar = phi_bar;
    p.phi_low = phi_low;
    p.y = y;
    p.kappa = kappa;
    p.weights = Eigen::VectorXd::Constant(phi_bar.rows(),
                                          1.0 / static_cast<double>(phi_bar.rows()));
    p.beta = beta;
    p.with_bias = true;
    return p;
}

}  // namespace

RuleFit solve_rule_given_labels(const TransitionPairSet& pairs,
                                const LabelAssignment& labels,
                                const FeatureMap& map, double beta,
                                double tol) {
    validate(labels);
    if (labels.size() != pairs.size())
        throw std::invalid_argument("solve_rule_given_labels: size mismatch");
    MarginProblem p = make_pair_problem(map.apply_rows(pairs.first),
                                        map.apply_rows(pairs.second), labels.y,
                                        labels.kappa, beta);
    return solve_margin_qp(p, tol);
}

Eigen::MatrixXd label_costs(const TransitionPairSet& pairs,
                            const DecisionRule& rule) {
    const Eigen::MatrixXd Sbar =
        margin_scores(rule.feature_map.apply_rows(pairs.first), rule.W, rule.b);
    const Eigen::MatrixXd Slow = margin_scores(
        rule.feature_map.apply_rows(pairs.second), rule.W, rule.b);
    return margin_label_costs(Sbar, Slow, /*pair_mode=*/true);
}

double evaluate_objective(const TransitionPairSet& pairs,
                          const LabelAssignment& labels,
                          const DecisionRule& rule, double beta) {
    validate(labels);
    const Eigen::MatrixXd H = label_costs(pairs, rule);
    double loss = 0.0;
    for (Eigen::Index n = 0; n < pairs.size(); ++n) loss += H(n, labels.y[n]);
    return 0.5 * beta * rule.W.squaredNorm() +
           loss / static_cast<double>(pairs.size());
}

LocalSearchResult alternating_local_search(const Eigen::MatrixXd& phi_bar,
                                           const Eigen::MatrixXd& phi_low,
                                           std::vector<int> initial_labels,
                                           int kappa, double beta,
                                           double rho_l, double rho_u,
                                           double alpha_h, int max_rounds,
                                           double rule_tol, bool with_bias) {
    const Eigen::Index n = phi_bar.rows();
    const bool pair_mode = phi_low.size() > 0;

    MarginProblem p;
    p.phi_bar = phi_bar;
    p.phi_low = phi_low;
    p.kappa = kappa;
    p.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    p.beta = beta;
    p.with_bias = with_bias;

    // Project the initial labeling onto the balance window, changing as few
    // labels as possible, so every later half step compares feasible points.
    {
        std::vector<long> counts(kappa, 0);
        for (int label : initial_labels) ++counts[label];
        const auto [lo, hi] = assignment_bounds(n, rho_l, rho_u);
        bool feasible = true;
        for (int k = 0; k < kappa; ++k)
            if (counts[k] < lo || counts[k] > hi) feasible = false;
        if (!feasible) {
            Eigen::MatrixXd H0 = Eigen::MatrixXd::Ones(n, kappa);
            for (Eigen::Index i = 0; i < n; ++i) H0(i, initial_labels[i]) = 0.0;
            initial_labels =
                solve_assignment({H0, rho_l, rho_u}).labels;
        }
    }
    p.y = std::move(initial_labels);

    LocalSearchResult out;
    out.W = Eigen::MatrixXd::Zero(kappa, phi_bar.cols());
    out.b = Eigen::VectorXd::Zero(kappa);

    double prev_objective = std::numeric_limits<double>::infinity();
    bool have_rule = false;

    for (int round = 1; round <= max_rounds; ++round) {
        // rule half step
        RuleFit fit = solve_margin_qp(p, rule_tol, have_rule ? &out.W : nullptr,
                                      have_rule ? &out.b : nullptr);
        if (!std::isfinite(fit.objective) ||
            fit.status == SolveStatus::numerical_error ||
            fit.status == SolveStatus::infeasible) {
            if (!have_rule)
                throw std::runtime_error(
                    "alternating_local_search: rule subproblem failed");
            fit.W = out.W;
            fit.b = out.b;
            fit.objective = margin_objective(p, out.W, out.b);
        }
        if (have_rule) {
            const double before = margin_objective(p, out.W, out.b);
            if (fit.objective > before) {
                // keep the previous rule rather than accept a regression from
                // the inexact subproblem solve
                fit.W = out.W;
                fit.b = out.b;
                fit.objective = before;
            }
            if (fit.objective > prev_objective +
                                    1e-9 * std::max(1.0, std::abs(prev_objective)))
                throw std::logic_error(
                    "alternating_local_search: rule step increased the "
                    "objective");
        }
        out.W = fit.W;
        out.b = fit.b;
        have_rule = true;

        // label half step
        const Eigen::MatrixXd Sbar = margin_scores(phi_bar, out.W, out.b);
        const Eigen::MatrixXd Slow =
            pair_mode ? margin_scores(phi_low, out.W, out.b) : Eigen::MatrixXd();
        const Eigen::MatrixXd H = margin_label_costs(Sbar, Slow, pair_mode);
        AssignmentResult assign =
            solve_assignment({p.weights.asDiagonal() * H, rho_l, rho_u});

        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            loss += p.weights(i) * H(i, assign.labels[i]);
        const double objective = 0.5 * beta * out.W.squaredNorm() + loss;
        if (objective >
            fit.objective + 1e-9 * std::max(1.0, std::abs(fit.objective)))
            throw std::logic_error(
                "alternating_local_search: label step increased the objective");

        long hamming = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (assign.labels[i] != p.y[i]) ++hamming;

        IterationRecord rec;
        rec.iteration = round;
        rec.objective = objective;
        rec.hamming = hamming;
        rec.class_counts.assign(kappa, 0);
        for (int label : assign.labels) ++rec.class_counts[label];
        out.history.push_back(rec);

        p.y = std::move(assign.labels);
        prev_objective = objective;
        out.objective = objective;
        if (static_cast<double>(hamming) <= alpha_h) {
            out.converged = true;
            break;
        }
    }
    out.labels = p.y;
    return out;
}

M3CResult run_m3c_fixed_sigma(const TransitionPairSet& pairs,
                              const CoarsePairSet& coarse,
                              const M3CConfig& config, double sigma) {
    validate(config);
    const FeatureMap map =
        make_feature_map(sigma, config.feature_dim, static_cast<int>(pairs.dim()),
                         derive_seed(config.seed, {hash_tag("rff")}));

    const Eigen::MatrixXd phic_bar = map.apply_rows(coarse.centers.first);
    const Eigen::MatrixXd phic_low = map.apply_rows(coarse.centers.second);
    const DualData dual =
        assemble_dual_data(phic_bar, phic_low, build_B(config.kappa),
                           coarse.weights, config.beta);

    RelaxationSolution relax =
        solve_relaxation(dual, config.rho_l, config.rho_u, config.relax_tol,
                         config.relax_max_iters, config.relax_centering);
    if (relax.status == SolveStatus::infeasible ||
        relax.status == SolveStatus::unbounded ||
        relax.status == SolveStatus::numerical_error)
        throw std::runtime_error(
            std::string("m3c global search: relaxation failed with status ") +
            to_string(relax.status));

    // Initialization candidates: the spectral rounding of the relaxed M,
    // plus a kinetic lumping of the coarse bins. The refinement keeps the
    // lower-objective result (ties go to the spectral rounding).
    std::vector<std::vector<int>> inits;
    inits.push_back(recover_coarse_labels(
        relax.M, config.kappa, derive_seed(config.seed, {hash_tag("spectral")}),
        config.kmeans_restarts));
    inits.push_back(kinetic_bin_labels(
        pairs, coarse, config.kappa,
        derive_seed(config.seed, {hash_tag("kinetic")}),
        config.kmeans_restarts));

    const Eigen::MatrixXd phi_bar = map.apply_rows(pairs.first);
    const Eigen::MatrixXd phi_low = map.apply_rows(pairs.second);
    LocalSearchResult local;
    local.objective = std::numeric_limits<double>::infinity();
    for (const auto& yc : inits) {
        LocalSearchResult candidate = alternating_local_search(
            phi_bar, phi_low, lift_labels(yc, coarse.bin_of_pair),
            config.kappa, config.beta, config.rho_l, config.rho_u,
            config.alpha_h, config.max_rounds, config.rule_tol,
            /*with_bias=*/true);
        if (candidate.objective < local.objective) local = std::move(candidate);
    }

    M3CResult result;
    result.rule.W = local.W;
    result.rule.b = local.b;
    result.rule.feature_map = map;
    result.labels.y = local.labels;
    result.labels.kappa = config.kappa;
    result.history = std::move(local.history);
    result.objective = local.objective;
    result.sigma = sigma;
    result.status = (local.converged && relax.status == SolveStatus::optimal)
                        ? SolveStatus::optimal
                        : SolveStatus::max_iterations;

    // A width whose rule leaves some state without any training point has
    // not decomposed the data; treat it like any other failed candidate.
    std::vector<long> point_counts(config.kappa, 0);
    for (int label : result.rule.predict_rows(pairs.first)) ++point_counts[label];
    for (int label : result.rule.predict_rows(pairs.second)) ++point_counts[label];
    for (int k = 0; k < config.kappa; ++k)
        if (point_counts[k] == 0)
            throw std::runtime_error(
                "degenerate decomposition at sigma " + std::to_string(sigma) +
                ": state " + std::to_string(k + 1) +
                " contains no training points");
    return result;
}

SigmaSearchResult grid_search_sigma(const TransitionPairSet& pairs,
                                    const std::vector<double>& sigmas,
                                    const M3CConfig& config) {
    if (sigmas.empty())
        throw std::invalid_argument("grid_search_sigma: no candidates");
    CoarsePairSet coarse =
        coarse_grain(pairs, config.n_bins, config.kmedoids_restarts,
                     derive_seed(config.seed, {hash_tag("coarse")}));

    SigmaSearchResult out;
    out.objectives.assign(sigmas.size(), std::numeric_limits<double>::quiet_NaN());
    out.errors.assign(sigmas.size(), "");

    // candidates are independent; evaluate them on a small worker pool and
    // merge deterministically by objective with index tie-break
    std::vector<std::optional<M3CResult>> results(sigmas.size());
    int n_threads = config.grid_threads > 0
                        ? config.grid_threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads,
                                          static_cast<int>(sigmas.size())));
    auto work = [&](int t) {
        for (std::size_t i = t; i < sigmas.size(); i += n_threads) {
            try {
                results[i] = run_m3c_fixed_sigma(pairs, coarse, config, sigmas[i]);
                out.objectives[i] = results[i]->objective;
            } catch (const std::exception& err) {
                out.errors[i] = err.what();
            }
        }
    };
    if (n_threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> workers;
        for (int t = 0; t < n_threads; ++t) workers.emplace_back(work, t);
        for (auto& w : workers) w.join();
    }

    int best = -1;
    for (std::size_t i = 0; i < sigmas.size(); ++i)
        if (results[i] &&
            (best < 0 || out.objectives[i] < out.objectives[best]))
            best = static_cast<int>(i);
    if (best < 0)
        throw std::runtime_error(
            "grid_search_sigma: every candidate width failed; first error: " +
            out.errors.front());
    out.sigma = sigmas[best];
    out.best = std::move(*results[best]);
    out.best.grid_objectives = out.objectives;
    return out;
}

M3CResult run_m3c(const std::vector<Trajectory>& trajs,
                  const M3CConfig& config) {
    validate(config);
    const TransitionPairSet pairs = extract_pairs(trajs);
    if (config.n_bins >= pairs.size())
        throw std::invalid_argument("run_m3c: n_bins must be below the pair count");
    SigmaSearchResult search = grid_search_sigma(pairs, config.sigmas(), config);
    return std::move(search.best);
}

}  // namespace m3c
