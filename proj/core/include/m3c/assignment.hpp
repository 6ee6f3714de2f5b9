#pragma once

#include <Eigen/Dense>
#include <vector>

namespace m3c {

// Assignment of N items to kappa classes minimizing sum_i cost(i, y_i),
// subject to per-class occupancy windows
//   ceil(rho_l * N) <= |{i : y_i = k}| <= floor(rho_u * N).
// The LP relaxation is integral (row-sum-1 plus column capacities is
// totally unimodular), so a min-cost flow gives exact integer optima.
struct AssignmentLP {
    Eigen::MatrixXd cost;  // N x kappa
    double rho_l = 0.0;
    double rho_u = 1.0;
};

struct AssignmentResult {
    std::vector<int> labels;  // 0-based
    double objective = 0.0;
};

// Throws std::invalid_argument if the capacity window admits no assignment
// or the costs are not finite.
AssignmentResult solve_assignment(const AssignmentLP& lp);

// Integer bounds actually enforced for a given instance.
std::pair<long, long> assignment_bounds(Eigen::Index n, double rho_l,
                                        double rho_u);

}  // namespace m3c
