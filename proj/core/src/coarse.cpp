#include "m3c/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "m3c/rng.hpp"

namespace m3c {

namespace {

// Groups identical rows so medoids can be kept on distinct values.
struct DistinctGroups {
    std::vector<int> group_of;             // point -> group
    std::vector<Eigen::Index> representative;  // group -> first point index
};

DistinctGroups distinct_groups(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto cmp = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            if (points(a, c) < points(b, c)) return true;
            if (points(a, c) > points(b, c)) return false;
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), cmp);

    DistinctGroups groups;
    groups.group_of.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i == 0 || points.row(order[i]) != points.row(order[i - 1]))
            groups.representative.push_back(order[i]);
        groups.group_of[order[i]] =
            static_cast<int>(groups.representative.size()) - 1;
    }
    // canonical representative: smallest point index in the group
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index& rep = groups.representative[groups.group_of[i]];
        rep = std::min(rep, i);
    }
    return groups;
}

// Distance access, backed by a full cache when it fits in memory.
class DistanceOracle {
  public:
    explicit DistanceOracle(const Eigen::MatrixXd& points) : points_(points) {
        const Eigen::Index n = points.rows();
        if (n <= kCacheLimit) {
            cache_.resize(n, n);
            const Eigen::VectorXd sq = points.rowwise().squaredNorm();
            cache_ = -2.0 * points * points.transpose();
            cache_.colwise() += sq;
            cache_.rowwise() += sq.transpose();
            cache_ = cache_.cwiseMax(0.0).cwiseSqrt();
        }
    }

    bool cached() const { return cache_.size() > 0; }

    // distances from point o to all points; the cached path hands out a
    // pointer into the (column-major) cache to avoid copying
    const double* row(Eigen::Index o, Eigen::VectorXd& scratch) const {
        if (cached()) return cache_.col(o).data();
        scratch = (points_.rowwise() - points_.row(o)).rowwise().norm();
        return scratch.data();
    }

    double operator()(Eigen::Index a, Eigen::Index b) const {
        if (cached()) return cache_(a, b);
        return (points_.row(a) - points_.row(b)).norm();
    }

  private:
    static constexpr Eigen::Index kCacheLimit = 4600;
    const Eigen::MatrixXd& points_;
    Eigen::MatrixXd cache_;
};

struct RestartResult {
    std::vector<Eigen::Index> medoids;
    double scatter = std::numeric_limits<double>::infinity();
};

// One random-init + swap-descent run.
RestartResult run_restart(const Eigen::MatrixXd& points,
                          const DistanceOracle& dist,
                          const DistinctGroups& groups, int k,
                          std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    const int n_groups = static_cast<int>(groups.representative.size());
    auto rng = make_engine(seed);

    // sample k distinct groups (partial Fisher-Yates)
    std::vector<int> pool(n_groups);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<Eigen::Index> medoids(k);
    std::vector<char> is_medoid_group(n_groups, 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n_groups - 1);
        std::swap(pool[i], pool[pick(rng)]);
        medoids[i] = groups.representative[pool[i]];
        is_medoid_group[pool[i]] = 1;
    }

    std::vector<int> n1(n);
    Eigen::VectorXd d1(n), d2(n), scratch(n);
    Eigen::VectorXd loss(k), acc(k);

    auto recompute = [&]() {
        d1.setConstant(std::numeric_limits<double>::infinity());
        d2.setConstant(std::numeric_limits<double>::infinity());
        for (int i = 0; i < k; ++i) {
            const double* drow = dist.row(medoids[i], scratch);
            for (Eigen::Index j = 0; j < n; ++j) {
                const double d = drow[j];
                if (d < d1(j)) {
                    d2(j) = d1(j);
                    d1(j) = d;
                    n1[j] = i;
                } else if (d < d2(j)) {
                    d2(j) = d;
                }
            }
        }
        loss.setZero();
        for (Eigen::Index j = 0; j < n; ++j) loss(n1[j]) += d2(j) - d1(j);
    };
    recompute();

    const int max_sweeps = 200;
    const double* d1p = d1.data();
    const double* d2p = d2.data();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool improved = false;
        for (int g = 0; g < n_groups; ++g) {
            if (is_medoid_group[g]) continue;
            const Eigen::Index o = groups.representative[g];
            const double* drow = dist.row(o, scratch);
            acc = loss;
            double shared = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double d = drow[j];
                if (d < d2p[j]) {
                    if (d < d1p[j]) {
                        shared += d - d1p[j];
                        acc(n1[j]) += d1p[j] - d2p[j];
                    } else {
                        acc(n1[j]) += d - d2p[j];
                    }
                }
            }
            int best = 0;
            for (int i = 1; i < k; ++i)
                if (acc(i) < acc(best)) best = i;
            if (acc(best) + shared < -1e-12) {
                is_medoid_group[groups.group_of[medoids[best]]] = 0;
                medoids[best] = o;
                is_medoid_group[g] = 1;
                recompute();
                improved = true;
            }
        }
        if (!improved) break;
    }

    RestartResult result;
    result.medoids = std::move(medoids);
    result.scatter = d1.sum();
    return result;
}

}  // namespace

KMedoidsResult kmedoids(const Eigen::MatrixXd& points, int k, int restarts,
                        std::uint64_t seed, int n_threads) {
    const Eigen::Index n = points.rows();
    if (n < 1) throw std::invalid_argument("kmedoids: empty point set");
    if (k < 1) throw std::invalid_argument("kmedoids: k must be >= 1");
    if (restarts < 1) throw std::invalid_argument("kmedoids: restarts >= 1");

    const DistinctGroups groups = distinct_groups(points);
    if (k > static_cast<int>(groups.representative.size()))
        throw std::invalid_argument(
            "kmedoids: k exceeds the number of distinct points");

    const DistanceOracle dist(points);

    std::vector<RestartResult> results(restarts);
    if (n_threads <= 0)
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<int>(n_threads, restarts);
    if (n_threads <= 1) {
        for (int r = 0; r < restarts; ++r)
            results[r] =
                run_restart(points, dist, groups, k, derive_seed(seed, {42u, static_cast<std::uint64_t>(r)}));
    } else {
        std::vector<std::thread> workers;
        for (int t = 0; t < n_threads; ++t)
            workers.emplace_back([&, t]() {
                for (int r = t; r < restarts; r += n_threads)
                    results[r] = run_restart(
                        points, dist, groups, k,
                        derive_seed(seed, {42u, static_cast<std::uint64_t>(r)}));
            });
        for (auto& w : workers) w.join();
    }

    int best = 0;
    for (int r = 1; r < restarts; ++r)
        if (results[r].scatter < results[best].scatter) best = r;

    KMedoidsResult out;
    out.medoids = results[best].medoids;
    std::sort(out.medoids.begin(), out.medoids.end());
    out.assignment.resize(n);
    Eigen::VectorXd scratch(n);
    Eigen::VectorXd best_d =
        Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < k; ++i) {
        const double* drow = dist.row(out.medoids[i], scratch);
        for (Eigen::Index j = 0; j < n; ++j)
            if (drow[j] < best_d(j)) {
                best_d(j) = drow[j];
                out.assignment[j] = i;
            }
    }
    out.scatter = best_d.sum();
    return out;
}

CoarsePointSet coarse_grain_points(const Eigen::MatrixXd& points, int n_bins,
                                   int restarts, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    if (n_bins < 1 || n_bins > n)
        throw std::invalid_argument("coarse_grain: n_bins out of range");
    KMedoidsResult km = kmedoids(points, n_bins, restarts, seed);

    CoarsePointSet out;
    out.centers.resize(n_bins, points.cols());
    for (int i = 0; i < n_bins; ++i)
        out.centers.row(i) = points.row(km.medoids[i]);
    out.weights = Eigen::VectorXd::Zero(n_bins);
    for (Eigen::Index j = 0; j < n; ++j) out.weights(km.assignment[j]) += 1.0;
    out.weights /= static_cast<double>(n);
    out.bin_of_point = std::move(km.assignment);
    out.medoid_index = std::move(km.medoids);
    return out;
}

CoarsePairSet coarse_grain(const TransitionPairSet& pairs, int n_bins,
                           int restarts, std::uint64_t seed) {
    CoarsePointSet flat =
        coarse_grain_points(pairs.concatenated(), n_bins, restarts, seed);
    const Eigen::Index d = pairs.dim();

    CoarsePairSet out;
    out.centers.first.resize(n_bins, d);
    out.centers.second.resize(n_bins, d);
    for (int i = 0; i < n_bins; ++i) {
        out.centers.first.row(i) = pairs.first.row(flat.medoid_index[i]);
        out.centers.second.row(i) = pairs.second.row(flat.medoid_index[i]);
    }
    out.weights = std::move(flat.weights);
    out.bin_of_pair = std::move(flat.bin_of_point);
    out.medoid_index = std::move(flat.medoid_index);
    return out;
}

}  // namespace m3c
