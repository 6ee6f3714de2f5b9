#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace m3c {

struct KMeansResult {
    Eigen::MatrixXd centers;
    std::vector<int> labels;
    double inertia = 0.0;
};

// Lloyd iterations with random distinct-point initialization per restart.
// Empty clusters are repaired by moving in the point farthest from its
// current center, so every cluster is nonempty on return.
KMeansResult kmeans(const Eigen::MatrixXd& X, int k, int restarts,
                    std::uint64_t seed, int max_iters = 100);

// Normalized spectral clustering of a symmetric similarity matrix in [0,1]:
// embed with the top-k eigenvectors of D^{-1/2} S D^{-1/2}, normalize rows,
// cluster with k-means.
std::vector<int> spectral_cluster(const Eigen::MatrixXd& similarity, int k,
                                  std::uint64_t seed, int kmeans_restarts = 20);

}  // namespace m3c
