#pragma once

#include <filesystem>
#include <vector>

#include "m3c/decision_rule.hpp"
#include "m3c/types.hpp"

namespace m3c {

// Trajectory CSV interchange format: header `traj_id,t,x1,...,xD`, rows
// sorted by (traj_id, t), values in decimal or scientific notation. Writing
// uses 17 significant digits so a write/read round trip reproduces doubles
// exactly.

std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path);
void write_trajectories_csv(const std::vector<Trajectory>& trajs,
                            const std::filesystem::path& path);
void write_trajectory_csv(const Trajectory& traj,
                          const std::filesystem::path& path);

// Reads every *.csv under a directory (sorted by name) or a single file.
std::vector<Trajectory> read_trajectory_input(const std::filesystem::path& path);

// Label CSV: header `pair_index,label`, labels 1-based on disk.
void write_labels_csv(const LabelAssignment& labels,
                      const std::filesystem::path& path);
LabelAssignment read_labels_csv(const std::filesystem::path& path, int kappa);

// Decision rule JSON, self-contained: kappa, d, W (row-major), b, and the
// full feature map (sigma, dims, seed, frequencies, phases).
void save_decision_rule(const DecisionRule& rule,
                        const std::filesystem::path& path);
DecisionRule load_decision_rule(const std::filesystem::path& path);

}  // namespace m3c
