#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "m3c/baselines.hpp"
#include "m3c/dynamics.hpp"
#include "m3c/eval.hpp"
#include "m3c/io.hpp"
#include "m3c/m3c.hpp"

namespace m3c {

enum class Method { m3c, mmc, kmedoids, pcca };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

// Data-generation settings for the diffusion benchmarks: independent runs
// with uniformly drawn starting points.
struct SimulationProtocol {
    std::string model = "model1";
    int n_trajs = 10;
    double t_end = 80.0;
    double sample_dt = 0.2;
    double integrator_dt = 0.0;  // <= 0 means the model default
    double x0_min = -1.5;
    double x0_max = 1.5;
};

SimulationProtocol model1_protocol();
SimulationProtocol model2_protocol();

std::vector<Trajectory> simulate_protocol(const SimulationProtocol& protocol,
                                          std::uint64_t seed);

struct MethodParams {
    M3CConfig config;   // kappa/beta/rho/bins/grid/seed shared by all methods
    int pcca_bins = 10;
};

// Method-erased decomposition result: whatever the method produced, plus a
// labeler that maps any state vector to a metastable label.
struct Decomposition {
    Method method = Method::m3c;
    int kappa = 0;
    std::optional<DecisionRule> rule;     // m3c, mmc
    Eigen::MatrixXd medoids;              // kmedoids
    std::optional<BinnedModel> binned;    // pcca
    std::vector<IterationRecord> history;
    LabelAssignment train_labels;  // pairs for m3c, points otherwise
    double objective = 0.0;
    double sigma = 0.0;
    std::vector<double> grid_objectives;
    SolveStatus status = SolveStatus::optimal;
    PointLabeler labeler;
};

Decomposition decompose(const std::vector<Trajectory>& trajs, Method method,
                        const MethodParams& params);

// Kinetic evaluation against one fresh long reference simulation labeled
// through the decomposition.
struct EvalOptions {
    double reference_t_end = 1e4;
    std::vector<double> tau_list;  // empty -> {dt, 2dt, 4dt}
    std::uint64_t seed = 0;
};

struct KineticMetrics {
    double q = 0.0;
    TransitionMatrix transition;
    std::vector<double> tau_list;
    TimescaleReport its;
};

KineticMetrics evaluate_kinetics(const PointLabeler& labeler, int kappa,
                                 const SimulationProtocol& protocol,
                                 const EvalOptions& options);

// Result bundle directory: manifest + rule/medoids/bin model + labels +
// history + config snapshot.
void write_bundle(const std::filesystem::path& dir, const Decomposition& dec,
                  const MethodParams& params);
Decomposition load_bundle(const std::filesystem::path& dir);

void write_metrics_json(const std::filesystem::path& path,
                        const std::string& method, std::uint64_t seed,
                        const KineticMetrics* kinetics, const double* err_train,
                        const double* err_test);
void append_metrics_csv(const std::filesystem::path& path,
                        const std::string& method, std::uint64_t seed,
                        const KineticMetrics& kinetics);

// JSON round trip of the configuration (used by bundles, config files and
// the command line).
std::string m3c_config_to_json(const M3CConfig& config, Method method,
                               int pcca_bins);
MethodParams m3c_config_from_json(const std::string& text, Method* method);

// Replicated benchmark: per replicate, one simulated data set shared by all
// methods, then decompose + evaluate. Failures are recorded and skipped in
// the aggregate.
struct BenchmarkSpec {
    SimulationProtocol protocol;
    std::vector<Method> methods;
    MethodParams params;
    int replicates = 20;
    EvalOptions eval;
    std::uint64_t master_seed = 1;
};

struct ReplicateOutcome {
    int replicate = 0;
    Method method = Method::m3c;
    bool ok = false;
    std::string error;
    double q = 0.0;
    std::vector<IterationRecord> history;
};

struct BenchmarkReport {
    struct Row {
        Method method;
        int n_ok = 0;
        int n_failed = 0;
        double mean_q = 0.0;
        double std_q = 0.0;
    };
    std::vector<Row> rows;
    std::vector<ReplicateOutcome> outcomes;
};

// out_dir may be empty; when set, per-replicate bundles and metrics are
// written there and finished replicates are picked up on resume.
BenchmarkReport run_benchmark(const BenchmarkSpec& spec,
                              const std::filesystem::path& out_dir);

std::string format_benchmark_table(const BenchmarkReport& report);

// Sequential-pattern experiment on synthetic Gaussian class pools: a slowly
// mixing label chain picks patterns without repetition; held-out pool items
// form the test set. Class k is centered at separation * e_k on the first
// kappa coordinates and stretched by `elongation` along the axis of the
// next class's mean, so each class leaks a thin tail toward its neighbor:
// nearest-center geometry mislabels the tails while a margin boundary can
// curve around them.
struct SequenceExperimentSpec {
    int kappa = 3;
    long length = 1000;
    int pattern_dim = 5;
    double separation = 2.0;
    double elongation = 1.0;
    long pool_size = 800;
    std::uint64_t seed = 1;
};

struct SequenceData {
    Eigen::MatrixXd train;
    std::vector<int> train_truth;
    Eigen::MatrixXd test;
    std::vector<int> test_truth;
};

SequenceData make_gaussian_sequence(const SequenceExperimentSpec& spec);

struct SequenceErrors {
    double train = 0.0;
    double test = 0.0;
};

// Permutation matching is fixed on the training split and reused for test.
SequenceErrors sequence_errors(const SequenceData& data,
                               const PointLabeler& labeler, int kappa);

}  // namespace m3c
