#include "m3c/baselines.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "m3c/rng.hpp"
#include "m3c/spectral.hpp"

namespace m3c {

Eigen::MatrixXd flatten_points(const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("flatten_points: no data");
    const Eigen::Index d = trajs.front().dim();
    Eigen::Index n = 0;
    for (const auto& t : trajs) {
        if (t.dim() != d)
            throw std::invalid_argument("flatten_points: dimension mismatch");
        n += t.length();
    }
    Eigen::MatrixXd points(n, d);
    Eigen::Index row = 0;
    for (const auto& t : trajs) {
        points.middleRows(row, t.length()) = t.points;
        row += t.length();
    }
    return points;
}

int nearest_row(const Eigen::MatrixXd& rows, const Eigen::VectorXd& x) {
    int best = 0;
    double best_d = (rows.row(0).transpose() - x).squaredNorm();
    for (Eigen::Index i = 1; i < rows.rows(); ++i) {
        const double d = (rows.row(i).transpose() - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

PointLabeler nearest_medoid_labeler(Eigen::MatrixXd medoids) {
    return [medoids = std::move(medoids)](const Eigen::VectorXd& x) {
        return nearest_row(medoids, x);
    };
}

PointLabeler rule_labeler(DecisionRule rule) {
    return [rule = std::move(rule)](const Eigen::VectorXd& x) {
        return rule.predict(x);
    };
}

PointLabeler binned_labeler(Eigen::MatrixXd bin_centers,
                            std::vector<int> lumping) {
    return [bins = std::move(bin_centers),
            lump = std::move(lumping)](const Eigen::VectorXd& x) {
        return lump[nearest_row(bins, x)];
    };
}

KMedoidsDecomposition run_kmedoids_decomposition(
    const std::vector<Trajectory>& trajs, int kappa, int restarts,
    std::uint64_t seed) {
    const Eigen::MatrixXd points = flatten_points(trajs);
    KMedoidsResult km = kmedoids(points, kappa, restarts, seed);
    KMedoidsDecomposition out;
    out.medoids.resize(kappa, points.cols());
    for (int k = 0; k < kappa; ++k)
        out.medoids.row(k) = points.row(km.medoids[k]);
    out.point_labels = std::move(km.assignment);
    return out;
}

namespace {

MMCResult run_mmc_fixed_sigma(const Eigen::MatrixXd& points,
                              const CoarsePointSet& coarse,
                              const M3CConfig& config, double sigma) {
    const FeatureMap map = make_feature_map(
        sigma, config.feature_dim, static_cast<int>(points.cols()),
        derive_seed(config.seed, {hash_tag("rff")}));

    const Eigen::MatrixXd phic = map.apply_rows(coarse.centers);
    const Eigen::MatrixXd phic_zero =
        Eigen::MatrixXd::Zero(phic.rows(), phic.cols());
    const DualData dual =
        assemble_dual_data(phic, phic_zero, single_class_basis(config.kappa),
                           coarse.weights, config.beta);

    RelaxationSolution relax =
        solve_relaxation(dual, config.rho_l, config.rho_u, config.relax_tol,
                         config.relax_max_iters, config.relax_centering);
    if (relax.status == SolveStatus::infeasible ||
        relax.status == SolveStatus::unbounded ||
        relax.status == SolveStatus::numerical_error)
        throw std::runtime_error(
            std::string("mmc global search: relaxation failed with status ") +
            to_string(relax.status));

    const std::vector<int> yc = recover_coarse_labels(
        relax.M, config.kappa, derive_seed(config.seed, {hash_tag("spectral")}),
        config.kmeans_restarts);
    const std::vector<int> y0 = lift_labels(yc, coarse.bin_of_point);

    const Eigen::MatrixXd phi = map.apply_rows(points);
    LocalSearchResult local = alternating_local_search(
        phi, Eigen::MatrixXd(), y0, config.kappa, config.beta, config.rho_l,
        config.rho_u, config.alpha_h, config.max_rounds, config.rule_tol,
        /*with_bias=*/true);

    MMCResult result;
    result.rule.W = local.W;
    result.rule.b = local.b;
    result.rule.feature_map = map;
    result.point_labels = local.labels;
    result.history = std::move(local.history);
    result.objective = local.objective;
    result.sigma = sigma;
    result.status = (local.converged && relax.status == SolveStatus::optimal)
                        ? SolveStatus::optimal
                        : SolveStatus::max_iterations;

    std::vector<long> point_counts(config.kappa, 0);
    for (int label : result.rule.predict_rows(points)) ++point_counts[label];
    for (int k = 0; k < config.kappa; ++k)
        if (point_counts[k] == 0)
            throw std::runtime_error(
                "degenerate clustering at sigma " + std::to_string(sigma) +
                ": class " + std::to_string(k + 1) + " contains no points");
    return result;
}

}  // namespace

MMCResult run_mmc(const std::vector<Trajectory>& trajs,
                  const M3CConfig& config) {
    validate(config);
    const Eigen::MatrixXd points = flatten_points(trajs);
    if (config.n_bins >= points.rows())
        throw std::invalid_argument("run_mmc: n_bins must be below the point count");
    CoarsePointSet coarse =
        coarse_grain_points(points, config.n_bins, config.kmedoids_restarts,
                            derive_seed(config.seed, {hash_tag("coarse")}));

    const std::vector<double> sigmas = config.sigmas();
    std::vector<double> objectives(sigmas.size(),
                                   std::numeric_limits<double>::quiet_NaN());
    std::string first_error;
    MMCResult best;
    int best_idx = -1;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        try {
            MMCResult r = run_mmc_fixed_sigma(points, coarse, config, sigmas[i]);
            objectives[i] = r.objective;
            if (best_idx < 0 || r.objective < objectives[best_idx]) {
                best_idx = static_cast<int>(i);
                best = std::move(r);
            }
        } catch (const std::exception& err) {
            if (first_error.empty()) first_error = err.what();
        }
    }
    if (best_idx < 0)
        throw std::runtime_error("run_mmc: every candidate width failed; " +
                                 first_error);
    best.grid_objectives = objectives;
    return best;
}

BinnedModel run_pcca(const std::vector<Trajectory>& trajs, int kappa,
                     int n_bins, int restarts, std::uint64_t seed) {
    if (n_bins <= kappa)
        throw std::invalid_argument("run_pcca: n_bins must exceed kappa");
    const Eigen::MatrixXd points = flatten_points(trajs);
    const double dt = trajs.front().dt;
    for (const auto& t : trajs)
        if (std::abs(t.dt - dt) > 1e-12 * std::max(1.0, dt))
            throw std::invalid_argument("run_pcca: trajectories disagree on dt");

    KMedoidsResult km = kmedoids(points, n_bins, restarts, seed);
    Eigen::MatrixXd centers(n_bins, points.cols());
    for (int i = 0; i < n_bins; ++i) centers.row(i) = points.row(km.medoids[i]);

    // bin sequences per trajectory
    std::vector<std::vector<int>> seqs;
    {
        Eigen::Index row = 0;
        for (const auto& t : trajs) {
            std::vector<int> seq(t.length());
            for (Eigen::Index i = 0; i < t.length(); ++i)
                seq[i] = km.assignment[row + i];
            row += t.length();
            seqs.push_back(std::move(seq));
        }
    }

    BinnedModel model;
    std::vector<int> alive(n_bins);
    std::iota(alive.begin(), alive.end(), 0);
    std::vector<int> bin_remap(n_bins);
    std::iota(bin_remap.begin(), bin_remap.end(), 0);

    // merge bins that are never left into their nearest surviving neighbor
    for (;;) {
        const int nb = static_cast<int>(alive.size());
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nb, nb);
        for (const auto& seq : seqs)
            for (std::size_t t = 0; t + 1 < seq.size(); ++t)
                counts(bin_remap[seq[t]], bin_remap[seq[t + 1]]) += 1.0;
        int dead = -1;
        for (int i = 0; i < nb && dead < 0; ++i)
            if (counts.row(i).sum() <= 0.0) dead = i;
        if (dead < 0) {
            model.bin_transitions.counts = counts;
            model.bin_transitions.tau = dt;
            model.bin_transitions.P.resize(nb, nb);
            for (int i = 0; i < nb; ++i)
                model.bin_transitions.P.row(i) =
                    counts.row(i) / counts.row(i).sum();
            break;
        }
        if (nb <= kappa)
            throw std::runtime_error(
                "run_pcca: too few connected bins left after merging");
        // nearest surviving bin by center distance
        const int dead_old = alive[dead];
        int target = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nb; ++j) {
            if (j == dead) continue;
            const double d =
                (centers.row(alive[j]) - centers.row(dead_old)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                target = j;
            }
        }
        model.warnings.push_back("bin " + std::to_string(dead_old + 1) +
                                 " has no outgoing transitions; merged into bin " +
                                 std::to_string(alive[target] + 1));
        alive.erase(alive.begin() + dead);
        for (int& r : bin_remap) r = 0;
        for (std::size_t j = 0; j < alive.size(); ++j)
            bin_remap[alive[j]] = static_cast<int>(j);
        // remap dead bins to their merge target transitively
        for (int b = 0; b < n_bins; ++b) {
            bool is_alive = false;
            for (int a : alive) is_alive |= (a == b);
            if (!is_alive) {
                int t2 = -1;
                double bd = std::numeric_limits<double>::infinity();
                for (int a : alive) {
                    const double d =
                        (centers.row(a) - centers.row(b)).squaredNorm();
                    if (d < bd) {
                        bd = d;
                        t2 = a;
                    }
                }
                bin_remap[b] = bin_remap[t2];
            }
        }
    }

    const int nb = static_cast<int>(alive.size());
    Eigen::MatrixXd surviving(nb, points.cols());
    for (int j = 0; j < nb; ++j) surviving.row(j) = centers.row(alive[j]);
    model.bin_centers = surviving;

    // near-degenerate second eigenvalue means an (almost) disconnected chain
    Eigen::EigenSolver<Eigen::MatrixXd> eig(model.bin_transitions.P);
    std::vector<int> order(nb);
    std::iota(order.begin(), order.end(), 0);
    const auto& vals = eig.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(vals(a)) > std::abs(vals(b));
    });
    if (nb > 1 && std::abs(vals(order[1]) - std::complex<double>(1.0, 0.0)) <
                      1e-10)
        model.warnings.push_back(
            "transition graph is disconnected: eigenvalue 1 has multiplicity "
            "> 1");

    Eigen::MatrixXd embed(nb, kappa);
    for (int c = 0; c < kappa; ++c)
        for (int i = 0; i < nb; ++i)
            embed(i, c) = eig.eigenvectors()(i, order[c]).real();
    model.lumping =
        kmeans(embed, kappa, 20, derive_seed(seed, {hash_tag("lump")})).labels;
    return model;
}

}  // namespace m3c
