#include "m3c/spectral.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "m3c/rng.hpp"

namespace m3c {

namespace {

double assign_to_centers(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C,
                         std::vector<int>& labels) {
    const Eigen::Index n = X.rows();
    const int k = static_cast<int>(C.rows());
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = (X.row(i) - C.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double d = (X.row(i) - C.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
        inertia += best_d;
    }
    return inertia;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, int restarts,
                    std::uint64_t seed, int max_iters) {
    const Eigen::Index n = X.rows();
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: bad k");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts >= 1");

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();

    for (int r = 0; r < restarts; ++r) {
        auto rng = make_engine(derive_seed(seed, {7u, static_cast<std::uint64_t>(r)}));
        std::vector<Eigen::Index> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        Eigen::MatrixXd C(k, X.cols());
        for (int i = 0; i < k; ++i) {
            std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
            std::swap(pool[i], pool[pick(rng)]);
            C.row(i) = X.row(pool[i]);
        }

        std::vector<int> labels(n);
        double inertia = assign_to_centers(X, C, labels);
        for (int iter = 0; iter < max_iters; ++iter) {
            // update step
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
            std::vector<long> counts(k, 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(labels[i]) += X.row(i);
                ++counts[labels[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    C.row(c) = sums.row(c) / static_cast<double>(counts[c]);
                } else {
                    // repair: seed the empty cluster at the worst-fit point
                    Eigen::Index far = 0;
                    double far_d = -1.0;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double d =
                            (X.row(i) - C.row(labels[i])).squaredNorm();
                        if (d > far_d) {
                            far_d = d;
                            far = i;
                        }
                    }
                    C.row(c) = X.row(far);
                }
            }
            const double next = assign_to_centers(X, C, labels);
            if (next >= inertia - 1e-12 * std::max(1.0, inertia)) {
                inertia = std::min(inertia, next);
                break;
            }
            inertia = next;
        }

        // final empty-cluster repair: pull in the farthest point
        for (;;) {
            std::vector<long> counts(k, 0);
            for (int l : labels) ++counts[l];
            int empty = -1;
            for (int c = 0; c < k; ++c)
                if (counts[c] == 0) empty = c;
            if (empty < 0) break;
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (counts[labels[i]] <= 1) continue;
                const double d = (X.row(i) - C.row(labels[i])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            labels[far] = empty;
            C.row(empty) = X.row(far);
            inertia = assign_to_centers(X, C, labels);
        }

        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.labels = labels;
            best.centers = C;
        }
    }
    return best;
}

std::vector<int> spectral_cluster(const Eigen::MatrixXd& similarity, int k,
                                  std::uint64_t seed, int kmeans_restarts) {
    const Eigen::Index n = similarity.rows();
    if (similarity.cols() != n)
        throw std::invalid_argument("spectral_cluster: similarity not square");
    if (k < 1 || k > n) throw std::invalid_argument("spectral_cluster: bad k");

    Eigen::MatrixXd S = 0.5 * (similarity + similarity.transpose());
    S = S.cwiseMax(0.0).cwiseMin(1.0);
    Eigen::VectorXd deg = S.rowwise().sum().cwiseMax(1e-12);
    Eigen::VectorXd dinv = deg.array().rsqrt();
    Eigen::MatrixXd T = dinv.asDiagonal() * S * dinv.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    // eigenvalues ascending: take the last k columns
    Eigen::MatrixXd embed = eig.eigenvectors().rightCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = embed.row(i).norm();
        if (norm > 1e-12) embed.row(i) /= norm;
    }
    return kmeans(embed, k, kmeans_restarts, seed).labels;
}

}  // namespace m3c
