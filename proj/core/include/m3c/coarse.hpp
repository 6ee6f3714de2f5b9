#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "m3c/types.hpp"

namespace m3c {

struct KMedoidsResult {
    std::vector<Eigen::Index> medoids;  // indices into the point set, ascending
    std::vector<int> assignment;        // point -> medoid slot
    double scatter = 0.0;               // sum of distances to assigned medoid
};

// PAM-style k-medoids: random initialization per restart followed by swap
// local search until no improving swap, best restart by scatter (ties to the
// lower restart index). Deterministic in the seed; restarts run on a small
// thread pool. Throws if k exceeds the number of distinct points.
KMedoidsResult kmedoids(const Eigen::MatrixXd& points, int k, int restarts,
                        std::uint64_t seed, int n_threads = 0);

// Weighted coarse graining of a flat point set: medoid centers with weights
// proportional to bin occupancy. Every bin is nonempty and weights sum to 1.
struct CoarsePointSet {
    Eigen::MatrixXd centers;             // n_bins x dim, rows are data points
    Eigen::VectorXd weights;             // n_bins, sums to 1
    std::vector<int> bin_of_point;       // point -> bin
    std::vector<Eigen::Index> medoid_index;
};

CoarsePointSet coarse_grain_points(const Eigen::MatrixXd& points, int n_bins,
                                   int restarts, std::uint64_t seed);

// Coarse graining of the transition-pair space: k-medoids on the
// concatenated (xbar; xlow) vectors in input space.
struct CoarsePairSet {
    TransitionPairSet centers;           // n_bins medoid pairs
    Eigen::VectorXd weights;             // n_bins, sums to 1
    std::vector<int> bin_of_pair;        // pair -> bin
    std::vector<Eigen::Index> medoid_index;

    Eigen::Index size() const { return centers.size(); }
};

CoarsePairSet coarse_grain(const TransitionPairSet& pairs, int n_bins,
                           int restarts, std::uint64_t seed);

}  // namespace m3c
