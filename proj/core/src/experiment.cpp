#include "m3c/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "m3c/rng.hpp"

namespace m3c {

using nlohmann::json;

Method method_from_string(const std::string& name) {
    if (name == "m3c") return Method::m3c;
    if (name == "mmc") return Method::mmc;
    if (name == "kmedoids") return Method::kmedoids;
    if (name == "pcca") return Method::pcca;
    throw std::invalid_argument("unknown method: " + name);
}

std::string to_string(Method method) {
    switch (method) {
        case Method::m3c: return "m3c";
        case Method::mmc: return "mmc";
        case Method::kmedoids: return "kmedoids";
        case Method::pcca: return "pcca";
    }
    return "unknown";
}

SimulationProtocol model1_protocol() {
    SimulationProtocol p;
    p.model = "model1";
    p.n_trajs = 10;
    p.t_end = 80.0;
    p.sample_dt = 0.2;
    p.x0_min = -1.5;
    p.x0_max = 1.5;
    return p;
}

SimulationProtocol model2_protocol() {
    SimulationProtocol p;
    p.model = "model2";
    p.n_trajs = 50;
    p.t_end = 1.0;
    p.sample_dt = 0.02;
    p.x0_min = -2.0;
    p.x0_max = 2.0;
    return p;
}

std::vector<Trajectory> simulate_protocol(const SimulationProtocol& protocol,
                                          std::uint64_t seed) {
    const DiffusionModel model = diffusion_model(protocol.model);
    const double h = protocol.integrator_dt > 0.0 ? protocol.integrator_dt
                                                  : model.default_integrator_dt;
    std::vector<Trajectory> trajs;
    trajs.reserve(protocol.n_trajs);
    for (int i = 0; i < protocol.n_trajs; ++i) {
        auto rng = make_engine(
            derive_seed(seed, {hash_tag("x0"), static_cast<std::uint64_t>(i)}));
        std::uniform_real_distribution<double> uniform(protocol.x0_min,
                                                       protocol.x0_max);
        const Eigen::Vector2d x0(uniform(rng), uniform(rng));
        trajs.push_back(simulate(
            model, x0, protocol.t_end, protocol.sample_dt, h,
            derive_seed(seed, {hash_tag("traj"), static_cast<std::uint64_t>(i)}),
            i));
    }
    return trajs;
}

Decomposition decompose(const std::vector<Trajectory>& trajs, Method method,
                        const MethodParams& params) {
    const M3CConfig& config = params.config;
    Decomposition dec;
    dec.method = method;
    dec.kappa = config.kappa;
    switch (method) {
        case Method::m3c: {
            M3CResult r = run_m3c(trajs, config);
            dec.rule = r.rule;
            dec.history = std::move(r.history);
            dec.train_labels = std::move(r.labels);
            dec.objective = r.objective;
            dec.sigma = r.sigma;
            dec.grid_objectives = std::move(r.grid_objectives);
            dec.status = r.status;
            dec.labeler = rule_labeler(*dec.rule);
            break;
        }
        case Method::mmc: {
            MMCResult r = run_mmc(trajs, config);
            dec.rule = r.rule;
            dec.history = std::move(r.history);
            dec.train_labels.y = std::move(r.point_labels);
            dec.train_labels.kappa = config.kappa;
            dec.objective = r.objective;
            dec.sigma = r.sigma;
            dec.grid_objectives = std::move(r.grid_objectives);
            dec.status = r.status;
            dec.labeler = rule_labeler(*dec.rule);
            break;
        }
        case Method::kmedoids: {
            KMedoidsDecomposition r = run_kmedoids_decomposition(
                trajs, config.kappa, config.kmedoids_restarts, config.seed);
            dec.medoids = r.medoids;
            dec.train_labels.y = std::move(r.point_labels);
            dec.train_labels.kappa = config.kappa;
            dec.labeler = nearest_medoid_labeler(dec.medoids);
            break;
        }
        case Method::pcca: {
            BinnedModel r =
                run_pcca(trajs, config.kappa, params.pcca_bins,
                         config.kmedoids_restarts, config.seed);
            dec.binned = std::move(r);
            const Eigen::MatrixXd points = flatten_points(trajs);
            dec.train_labels.kappa = config.kappa;
            dec.train_labels.y.resize(points.rows());
            auto labeler =
                binned_labeler(dec.binned->bin_centers, dec.binned->lumping);
            for (Eigen::Index i = 0; i < points.rows(); ++i)
                dec.train_labels.y[i] = labeler(points.row(i).transpose());
            dec.labeler = std::move(labeler);
            break;
        }
    }
    return dec;
}

KineticMetrics evaluate_kinetics(const PointLabeler& labeler, int kappa,
                                 const SimulationProtocol& protocol,
                                 const EvalOptions& options) {
    SimulationProtocol ref = protocol;
    ref.n_trajs = 1;
    ref.t_end = options.reference_t_end;
    std::vector<Trajectory> run =
        simulate_protocol(ref, derive_seed(options.seed, {hash_tag("reference")}));
    const Trajectory& traj = run.front();

    std::vector<int> labels(traj.length());
    for (Eigen::Index i = 0; i < traj.length(); ++i)
        labels[i] = labeler(traj.points.row(i).transpose());

    KineticMetrics metrics;
    metrics.tau_list = options.tau_list;
    if (metrics.tau_list.empty())
        metrics.tau_list = {traj.dt, 2.0 * traj.dt, 4.0 * traj.dt};
    metrics.transition =
        estimate_transition_matrix({labels}, traj.dt, traj.dt, kappa);
    metrics.q = q_metric(metrics.transition);
    metrics.its = implied_timescales({labels}, traj.dt, metrics.tau_list, kappa);
    return metrics;
}

namespace {

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& history,
                       int kappa) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open: " + path.string());
    out << "iteration,objective,hamming";
    for (int k = 1; k <= kappa; ++k) out << ",count_" << k;
    out << "\n";
    out.precision(17);
    for (const auto& rec : history) {
        out << rec.iteration << ',' << rec.objective << ',' << rec.hamming;
        for (long c : rec.class_counts) out << ',' << c;
        out << "\n";
    }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c =
        r > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m(i, j) = rows.at(i).at(j).get<double>();
    return m;
}

}  // namespace

std::string m3c_config_to_json(const M3CConfig& config, Method method,
                               int pcca_bins) {
    json j;
    j["method"] = to_string(method);
    j["kappa"] = config.kappa;
    j["beta"] = config.beta;
    j["rho_l"] = config.rho_l;
    j["rho_u"] = config.rho_u;
    j["n_bins"] = config.n_bins;
    j["sigma_grid"] = config.sigmas();
    j["feature_dim"] = config.feature_dim;
    j["alpha_h"] = config.alpha_h;
    j["max_rounds"] = config.max_rounds;
    j["kmedoids_restarts"] = config.kmedoids_restarts;
    j["kmeans_restarts"] = config.kmeans_restarts;
    j["relax_tol"] = config.relax_tol;
    j["relax_max_iters"] = config.relax_max_iters;
    j["rule_tol"] = config.rule_tol;
    j["seed"] = config.seed;
    j["pcca_bins"] = pcca_bins;
    return j.dump(2);
}

MethodParams m3c_config_from_json(const std::string& text, Method* method) {
    json j = json::parse(text);
    MethodParams params;
    M3CConfig& c = params.config;
    if (method && j.contains("method"))
        *method = method_from_string(j.at("method").get<std::string>());
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("kappa", c.kappa);
    get("beta", c.beta);
    get("rho_l", c.rho_l);
    get("rho_u", c.rho_u);
    get("n_bins", c.n_bins);
    get("sigma_grid", c.sigma_grid);
    get("feature_dim", c.feature_dim);
    get("alpha_h", c.alpha_h);
    get("max_rounds", c.max_rounds);
    get("kmedoids_restarts", c.kmedoids_restarts);
    get("kmeans_restarts", c.kmeans_restarts);
    get("relax_tol", c.relax_tol);
    get("relax_max_iters", c.relax_max_iters);
    get("rule_tol", c.rule_tol);
    get("seed", c.seed);
    get("pcca_bins", params.pcca_bins);
    return params;
}

void write_bundle(const std::filesystem::path& dir, const Decomposition& dec,
                  const MethodParams& params) {
    std::filesystem::create_directories(dir);

    json manifest;
    manifest["method"] = to_string(dec.method);
    manifest["kappa"] = dec.kappa;
    manifest["objective"] = dec.objective;
    manifest["sigma"] = dec.sigma;
    manifest["grid_objectives"] = dec.grid_objectives;
    manifest["status"] = to_string(dec.status);
    manifest["seed"] = params.config.seed;
    {
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "config.json");
        out << m3c_config_to_json(params.config, dec.method, params.pcca_bins)
            << "\n";
    }
    write_labels_csv(dec.train_labels, dir / "labels.csv");
    write_history_csv(dir / "history.csv", dec.history, dec.kappa);
    if (dec.rule) save_decision_rule(*dec.rule, dir / "rule.json");
    if (dec.medoids.size() > 0) {
        json j;
        j["medoids"] = matrix_to_json(dec.medoids);
        std::ofstream out(dir / "medoids.json");
        out << j.dump(2) << "\n";
    }
    if (dec.binned) {
        json j;
        j["bin_centers"] = matrix_to_json(dec.binned->bin_centers);
        j["P"] = matrix_to_json(dec.binned->bin_transitions.P);
        j["counts"] = matrix_to_json(dec.binned->bin_transitions.counts);
        j["tau"] = dec.binned->bin_transitions.tau;
        j["lumping"] = dec.binned->lumping;
        j["warnings"] = dec.binned->warnings;
        std::ofstream out(dir / "pcca.json");
        out << j.dump(2) << "\n";
    }
}

Decomposition load_bundle(const std::filesystem::path& dir) {
    std::ifstream min(dir / "manifest.json");
    if (!min)
        throw std::runtime_error("not a result bundle (missing manifest.json): " +
                                 dir.string());
    json manifest;
    min >> manifest;

    Decomposition dec;
    dec.method = method_from_string(manifest.at("method").get<std::string>());
    dec.kappa = manifest.at("kappa").get<int>();
    dec.objective = manifest.at("objective").get<double>();
    dec.sigma = manifest.at("sigma").get<double>();
    if (manifest.contains("grid_objectives"))
        dec.grid_objectives =
            manifest.at("grid_objectives").get<std::vector<double>>();
    dec.train_labels = read_labels_csv(dir / "labels.csv", dec.kappa);

    switch (dec.method) {
        case Method::m3c:
        case Method::mmc: {
            dec.rule = load_decision_rule(dir / "rule.json");
            dec.labeler = rule_labeler(*dec.rule);
            break;
        }
        case Method::kmedoids: {
            std::ifstream in(dir / "medoids.json");
            if (!in)
                throw std::runtime_error("bundle missing medoids.json: " +
                                         dir.string());
            json j;
            in >> j;
            dec.medoids = matrix_from_json(j.at("medoids"));
            dec.labeler = nearest_medoid_labeler(dec.medoids);
            break;
        }
        case Method::pcca: {
            std::ifstream in(dir / "pcca.json");
            if (!in)
                throw std::runtime_error("bundle missing pcca.json: " +
                                         dir.string());
            json j;
            in >> j;
            BinnedModel model;
            model.bin_centers = matrix_from_json(j.at("bin_centers"));
            model.bin_transitions.P = matrix_from_json(j.at("P"));
            model.bin_transitions.counts = matrix_from_json(j.at("counts"));
            model.bin_transitions.tau = j.at("tau").get<double>();
            model.lumping = j.at("lumping").get<std::vector<int>>();
            model.warnings = j.at("warnings").get<std::vector<std::string>>();
            dec.binned = std::move(model);
            dec.labeler =
                binned_labeler(dec.binned->bin_centers, dec.binned->lumping);
            break;
        }
    }
    return dec;
}

void write_metrics_json(const std::filesystem::path& path,
                        const std::string& method, std::uint64_t seed,
                        const KineticMetrics* kinetics, const double* err_train,
                        const double* err_test) {
    json j;
    j["method"] = method;
    j["seed"] = seed;
    if (kinetics) {
        j["Q"] = kinetics->q;
        json its;
        for (std::size_t t = 0; t < kinetics->tau_list.size(); ++t) {
            std::ostringstream key;
            key << kinetics->tau_list[t];
            std::vector<double> row;
            for (Eigen::Index i = 0; i < kinetics->its.its.cols(); ++i)
                row.push_back(kinetics->its.its(static_cast<Eigen::Index>(t), i));
            its[key.str()] = row;
        }
        j["its"] = its;
        j["transition_matrix"] = matrix_to_json(kinetics->transition.P);
    } else {
        j["Q"] = nullptr;
        j["its"] = nullptr;
    }
    j["err_train"] = err_train ? json(*err_train) : json(nullptr);
    j["err_test"] = err_test ? json(*err_test) : json(nullptr);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open: " + path.string());
    out << j.dump(2) << "\n";
}

void append_metrics_csv(const std::filesystem::path& path,
                        const std::string& method, std::uint64_t seed,
                        const KineticMetrics& kinetics) {
    const bool fresh = !std::filesystem::exists(path);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open: " + path.string());
    out.precision(17);
    if (fresh) out << "method,seed,metric,tau,index,value\n";
    out << method << ',' << seed << ",Q,,," << kinetics.q << "\n";
    for (std::size_t t = 0; t < kinetics.tau_list.size(); ++t)
        for (Eigen::Index i = 0; i < kinetics.its.its.cols(); ++i)
            out << method << ',' << seed << ",ITS," << kinetics.tau_list[t]
                << ',' << (i + 2) << ','
                << kinetics.its.its(static_cast<Eigen::Index>(t), i) << "\n";
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec,
                              const std::filesystem::path& out_dir) {
    BenchmarkReport report;
    std::map<Method, std::vector<double>> q_values;
    std::map<Method, int> failures;

    for (int rep = 0; rep < spec.replicates; ++rep) {
        const std::uint64_t data_seed =
            derive_seed(spec.master_seed,
                        {hash_tag("data"), static_cast<std::uint64_t>(rep)});
        std::vector<Trajectory> trajs;  // simulated lazily, shared by methods
        for (Method method : spec.methods) {
            ReplicateOutcome outcome;
            outcome.replicate = rep;
            outcome.method = method;

            std::filesystem::path rep_dir;
            if (!out_dir.empty()) {
                std::ostringstream name;
                name << "rep_" << std::setw(3) << std::setfill('0') << rep;
                rep_dir = out_dir / name.str() / to_string(method);
                const auto metrics_file = rep_dir / "metrics.json";
                if (std::filesystem::exists(metrics_file)) {
                    std::ifstream in(metrics_file);
                    json j;
                    in >> j;
                    if (j.contains("Q") && !j.at("Q").is_null()) {
                        outcome.ok = true;
                        outcome.q = j.at("Q").get<double>();
                        q_values[method].push_back(outcome.q);
                        report.outcomes.push_back(outcome);
                        continue;
                    }
                }
            }

            try {
                if (trajs.empty()) trajs = simulate_protocol(spec.protocol, data_seed);
                MethodParams params = spec.params;
                params.config.seed = derive_seed(
                    spec.master_seed,
                    {hash_tag("method"), static_cast<std::uint64_t>(rep),
                     hash_tag(to_string(method))});
                Decomposition dec = decompose(trajs, method, params);
                EvalOptions eval = spec.eval;
                eval.seed = derive_seed(
                    spec.master_seed,
                    {hash_tag("eval"), static_cast<std::uint64_t>(rep)});
                KineticMetrics metrics = evaluate_kinetics(
                    dec.labeler, params.config.kappa, spec.protocol, eval);
                outcome.ok = true;
                outcome.q = metrics.q;
                outcome.history = dec.history;
                q_values[method].push_back(metrics.q);
                if (!rep_dir.empty()) {
                    write_bundle(rep_dir, dec, params);
                    write_metrics_json(rep_dir / "metrics.json",
                                       to_string(method), params.config.seed,
                                       &metrics, nullptr, nullptr);
                }
            } catch (const std::exception& err) {
                outcome.ok = false;
                outcome.error = err.what();
                ++failures[method];
            }
            report.outcomes.push_back(outcome);
        }
    }

    for (Method method : spec.methods) {
        BenchmarkReport::Row row;
        row.method = method;
        const auto& qs = q_values[method];
        row.n_ok = static_cast<int>(qs.size());
        row.n_failed = failures[method];
        if (!qs.empty()) {
            double mean = 0.0;
            for (double q : qs) mean += q;
            mean /= qs.size();
            double var = 0.0;
            for (double q : qs) var += (q - mean) * (q - mean);
            row.mean_q = mean;
            row.std_q = qs.size() > 1 ? std::sqrt(var / (qs.size() - 1)) : 0.0;
        }
        report.rows.push_back(row);
    }
    return report;
}

std::string format_benchmark_table(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "method      replicates  failed  mean Q      std Q\n";
    for (const auto& row : report.rows) {
        out << std::left << std::setw(12) << to_string(row.method)
            << std::setw(12) << row.n_ok << std::setw(8) << row.n_failed
            << std::setw(12) << std::setprecision(6) << std::fixed << row.mean_q
            << std::setw(12) << row.std_q << "\n";
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

SequenceData make_gaussian_sequence(const SequenceExperimentSpec& spec) {
    if (spec.kappa < 2 || spec.pattern_dim < spec.kappa)
        throw std::invalid_argument(
            "make_gaussian_sequence: need pattern_dim >= kappa >= 2");
    auto rng = make_engine(derive_seed(spec.seed, {hash_tag("pools")}));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Eigen::MatrixXd> pools(spec.kappa);
    for (int k = 0; k < spec.kappa; ++k) {
        const int stretched = (k + 1) % spec.kappa;
        pools[k].resize(spec.pool_size, spec.pattern_dim);
        for (long i = 0; i < spec.pool_size; ++i)
            for (int j = 0; j < spec.pattern_dim; ++j) {
                const double scale = j == stretched ? spec.elongation : 1.0;
                pools[k](i, j) =
                    scale * normal(rng) + (j == k ? spec.separation : 0.0);
            }
    }

    LabelChainSpec chain;
    chain.P = benchmark_chain_matrix(spec.kappa);
    chain.length = spec.length;
    chain.seed = derive_seed(spec.seed, {hash_tag("chain")});
    LabeledSequence seq = make_labeled_sequence(chain, pools);

    SequenceData data;
    data.train = seq.patterns;
    data.train_truth = seq.labels;
    long n_test = 0;
    std::vector<std::vector<char>> used(spec.kappa);
    for (int k = 0; k < spec.kappa; ++k) {
        used[k].assign(spec.pool_size, 0);
        for (long row : seq.chosen[k]) used[k][row] = 1;
        n_test += spec.pool_size - static_cast<long>(seq.chosen[k].size());
    }
    data.test.resize(n_test, spec.pattern_dim);
    data.test_truth.reserve(n_test);
    long row = 0;
    for (int k = 0; k < spec.kappa; ++k)
        for (long i = 0; i < spec.pool_size; ++i)
            if (!used[k][i]) {
                data.test.row(row++) = pools[k].row(i);
                data.test_truth.push_back(k);
            }
    return data;
}

SequenceErrors sequence_errors(const SequenceData& data,
                               const PointLabeler& labeler, int kappa) {
    std::vector<int> pred_train(data.train.rows());
    for (Eigen::Index i = 0; i < data.train.rows(); ++i)
        pred_train[i] = labeler(data.train.row(i).transpose());
    const ClusteringErrorResult train =
        clustering_error(data.train_truth, pred_train, kappa);

    std::vector<int> pred_test(data.test.rows());
    for (Eigen::Index i = 0; i < data.test.rows(); ++i)
        pred_test[i] = labeler(data.test.row(i).transpose());

    SequenceErrors errors;
    errors.train = train.error;
    errors.test = labeling_error_under_permutation(data.test_truth, pred_test,
                                                   train.permutation);
    return errors;
}

}  // namespace m3c
