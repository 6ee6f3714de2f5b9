#include "m3c/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace m3c {

TransitionMatrix estimate_transition_matrix(
    const std::vector<std::vector<int>>& label_seqs, double dt, double tau,
    int kappa) {
    if (dt <= 0.0 || tau <= 0.0)
        throw std::invalid_argument("estimate_transition_matrix: dt, tau > 0");
    const long lag = static_cast<long>(std::llround(tau / dt));
    if (lag < 1 || std::abs(lag * dt - tau) > 1e-9 * tau)
        throw std::invalid_argument(
            "estimate_transition_matrix: tau must be a multiple of dt");
    if (kappa < 1)
        throw std::invalid_argument("estimate_transition_matrix: kappa >= 1");

    TransitionMatrix tm;
    tm.tau = tau;
    tm.counts = Eigen::MatrixXd::Zero(kappa, kappa);
    for (const auto& seq : label_seqs) {
        for (std::size_t t = 0; t + lag < seq.size(); ++t) {
            const int a = seq[t];
            const int b = seq[t + lag];
            if (a < 0 || a >= kappa || b < 0 || b >= kappa)
                throw std::invalid_argument(
                    "estimate_transition_matrix: label out of range");
            tm.counts(a, b) += 1.0;
        }
    }
    tm.P.resize(kappa, kappa);
    std::string empty;
    for (int i = 0; i < kappa; ++i) {
        const double row_sum = tm.counts.row(i).sum();
        if (row_sum <= 0.0) {
            empty += (empty.empty() ? "" : ", ") + std::to_string(i + 1);
            continue;
        }
        tm.P.row(i) = tm.counts.row(i) / row_sum;
    }
    if (!empty.empty())
        throw std::runtime_error(
            "estimate_transition_matrix: no transitions observed from state(s) " +
            empty);
    return tm;
}

double q_metric(const TransitionMatrix& tm) { return tm.P.trace(); }

TimescaleReport implied_timescales(
    const std::vector<std::vector<int>>& label_seqs, double dt,
    const std::vector<double>& taus, int kappa) {
    TimescaleReport report;
    report.taus = taus;
    report.its.resize(static_cast<Eigen::Index>(taus.size()), kappa - 1);
    for (std::size_t it = 0; it < taus.size(); ++it) {
        const TransitionMatrix tm =
            estimate_transition_matrix(label_seqs, dt, taus[it], kappa);
        Eigen::EigenSolver<Eigen::MatrixXd> eig(tm.P);
        std::vector<Eigen::Index> order(kappa);
        std::iota(order.begin(), order.end(), 0);
        const auto& vals = eig.eigenvalues();
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double ma = std::abs(vals(a));
            const double mb = std::abs(vals(b));
            if (ma != mb) return ma > mb;
            return vals(a).real() > vals(b).real();
        });
        Eigen::VectorXd sorted(kappa);
        for (int i = 0; i < kappa; ++i) sorted(i) = vals(order[i]).real();
        report.eigenvalues.push_back(sorted);
        for (int i = 1; i < kappa; ++i) {
            const double lam = sorted(i);
            report.its(static_cast<Eigen::Index>(it), i - 1) =
                (lam > 0.0 && lam < 1.0) ? -taus[it] / std::log(lam) : 0.0;
        }
    }
    return report;
}

double labeling_error_under_permutation(const std::vector<int>& truth,
                                        const std::vector<int>& predicted,
                                        const std::vector<int>& permutation) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("labeling error: length mismatch");
    if (truth.empty()) return 0.0;
    long wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int p = predicted[i];
        if (p < 0 || p >= static_cast<int>(permutation.size()))
            throw std::invalid_argument("labeling error: label out of range");
        if (permutation[p] != truth[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

ClusteringErrorResult clustering_error(const std::vector<int>& truth,
                                       const std::vector<int>& predicted,
                                       int kappa) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("clustering_error: length mismatch");
    if (kappa < 1 || kappa > 10)
        throw std::invalid_argument("clustering_error: kappa out of range");

    // confusion counts so each permutation is scored in O(kappa^2)
    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(kappa, kappa);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= kappa || predicted[i] < 0 ||
            predicted[i] >= kappa)
            throw std::invalid_argument("clustering_error: label out of range");
        confusion(predicted[i], truth[i]) += 1.0;
    }

    std::vector<int> perm(kappa);
    std::iota(perm.begin(), perm.end(), 0);
    ClusteringErrorResult best;
    best.error = std::numeric_limits<double>::infinity();
    do {
        double hits = 0.0;
        for (int p = 0; p < kappa; ++p) hits += confusion(p, perm[p]);
        const double err =
            truth.empty() ? 0.0
                          : 1.0 - hits / static_cast<double>(truth.size());
        if (err < best.error) {
            best.error = err;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace m3c
