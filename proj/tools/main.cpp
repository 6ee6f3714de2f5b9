// Command-line front end: simulate benchmark diffusions, decompose
// trajectory data into metastable states, evaluate decompositions against a
// fresh reference run, and reproduce the replicated benchmark tables.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "m3c/experiment.hpp"
#include "m3c/rng.hpp"

namespace fs = std::filesystem;
using namespace m3c;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitWarnings = 3;

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

struct CommonOptions {
    std::string config_path;
    MethodParams params;
};

// flag values override the config file when explicitly given
void apply_flag_overrides(const CLI::App& cmd, MethodParams& params) {
    auto& c = params.config;
    if (cmd.count("--k")) c.kappa = cmd.get_option("--k")->as<int>();
    if (cmd.count("--beta")) c.beta = cmd.get_option("--beta")->as<double>();
    if (cmd.count("--rho")) {
        const auto rho = parse_double_list(cmd.get_option("--rho")->as<std::string>());
        if (rho.size() != 2)
            throw CLI::ValidationError("--rho", "expected two values: l,u");
        c.rho_l = rho[0];
        c.rho_u = rho[1];
    }
    if (cmd.count("--nc")) c.n_bins = cmd.get_option("--nc")->as<int>();
    if (cmd.count("--sigma"))
        c.sigma_grid = {cmd.get_option("--sigma")->as<double>()};
    if (cmd.count("--sigma-grid")) {
        const auto text = cmd.get_option("--sigma-grid")->as<std::string>();
        c.sigma_grid = text == "default" ? default_sigma_grid()
                                         : parse_double_list(text);
    }
    if (cmd.count("--d")) c.feature_dim = cmd.get_option("--d")->as<int>();
    if (cmd.count("--alpha-h"))
        c.alpha_h = cmd.get_option("--alpha-h")->as<double>();
    if (cmd.count("--rmax")) c.max_rounds = cmd.get_option("--rmax")->as<int>();
    if (cmd.count("--restarts"))
        c.kmedoids_restarts = cmd.get_option("--restarts")->as<int>();
    if (cmd.count("--seed"))
        c.seed = cmd.get_option("--seed")->as<std::uint64_t>();
    if (cmd.count("--bins"))
        params.pcca_bins = cmd.get_option("--bins")->as<int>();
}

void add_method_flags(CLI::App& cmd) {
    cmd.add_option("--k", "number of metastable states");
    cmd.add_option("--beta", "margin regularization weight");
    cmd.add_option("--rho", "class balance window, e.g. 0.01,0.99");
    cmd.add_option("--nc", "coarse-grained bin count");
    cmd.add_option("--sigma", "fixed kernel width (disables the grid)");
    cmd.add_option("--sigma-grid", "comma list of widths or 'default'");
    cmd.add_option("--d", "random feature dimension");
    cmd.add_option("--alpha-h", "label-change threshold for termination");
    cmd.add_option("--rmax", "maximum alternating rounds");
    cmd.add_option("--restarts", "k-medoids restarts");
    cmd.add_option("--bins", "bin count for the kinetic baseline");
    cmd.add_option("--seed", "master seed");
    cmd.add_option("--config", "JSON config file; flags override its values");
}

MethodParams collect_params(const CLI::App& cmd, Method* method) {
    MethodParams params;
    if (cmd.count("--config")) {
        const auto path = cmd.get_option("--config")->as<std::string>();
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config: " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        params = m3c_config_from_json(buffer.str(), method);
    }
    apply_flag_overrides(cmd, params);
    return params;
}

int cmd_simulate(const CLI::App& cmd) {
    SimulationProtocol protocol;
    protocol.model = cmd.get_option("--model")->as<std::string>();
    protocol.n_trajs = cmd.get_option("--trajs")->as<int>();
    protocol.t_end = cmd.get_option("--t-end")->as<double>();
    protocol.sample_dt = cmd.get_option("--sample-dt")->as<double>();
    if (cmd.count("--integrator-dt"))
        protocol.integrator_dt = cmd.get_option("--integrator-dt")->as<double>();
    if (cmd.count("--x0-box")) {
        const auto box =
            parse_double_list(cmd.get_option("--x0-box")->as<std::string>());
        if (box.size() != 2)
            throw CLI::ValidationError("--x0-box", "expected lo,hi");
        protocol.x0_min = box[0];
        protocol.x0_max = box[1];
    } else if (protocol.model == "model2") {
        protocol.x0_min = -2.0;
        protocol.x0_max = 2.0;
    }
    const auto seed = cmd.get_option("--seed")->as<std::uint64_t>();
    const fs::path out = cmd.get_option("--output")->as<std::string>();

    const auto trajs = simulate_protocol(protocol, seed);
    fs::create_directories(out);
    long samples = 0;
    for (const auto& traj : trajs) {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03d.csv", traj.id);
        write_trajectory_csv(traj, out / name);
        samples += traj.length();
    }
    std::cout << "wrote " << trajs.size() << " trajectories (" << samples
              << " samples) to " << out.string() << " [model=" << protocol.model
              << " seed=" << seed << "]\n";
    return kExitOk;
}

int cmd_decompose(const CLI::App& cmd) {
    auto parse_method = [&]() {
        try {
            return method_from_string(cmd.get_option("--method")->as<std::string>());
        } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError("--method", e.what());
        }
    };
    Method method = Method::m3c;
    if (cmd.count("--method")) method = parse_method();
    MethodParams params = collect_params(cmd, &method);
    if (cmd.count("--method"))  // the flag wins over the config file
        method = parse_method();

    const fs::path input = cmd.get_option("--input")->as<std::string>();
    const fs::path output = cmd.get_option("--output")->as<std::string>();
    const auto trajs = read_trajectory_input(input);

    const Decomposition dec = decompose(trajs, method, params);
    write_bundle(output, dec, params);
    std::cout << "method=" << to_string(dec.method)
              << " kappa=" << dec.kappa;
    if (dec.method == Method::m3c || dec.method == Method::mmc)
        std::cout << " sigma=" << dec.sigma << " objective=" << dec.objective;
    std::cout << " status=" << to_string(dec.status) << "\n";
    std::cout << "bundle written to " << output.string() << "\n";
    if (dec.status != SolveStatus::optimal &&
        (dec.method == Method::m3c || dec.method == Method::mmc)) {
        std::cerr << "warning: search did not fully converge; bundle holds "
                     "the best iterate\n";
        return kExitWarnings;
    }
    return kExitOk;
}

int cmd_evaluate(const CLI::App& cmd) {
    const fs::path bundle_dir = cmd.get_option("--bundle")->as<std::string>();
    const Decomposition dec = load_bundle(bundle_dir);

    EvalOptions options;
    options.seed = cmd.get_option("--seed")->as<std::uint64_t>();
    if (cmd.count("--t-end"))
        options.reference_t_end = cmd.get_option("--t-end")->as<double>();
    if (cmd.count("--tau-list"))
        options.tau_list =
            parse_double_list(cmd.get_option("--tau-list")->as<std::string>());

    SimulationProtocol protocol =
        cmd.get_option("--model")->as<std::string>() == "model2"
            ? model2_protocol()
            : model1_protocol();
    if (cmd.count("--sample-dt"))
        protocol.sample_dt = cmd.get_option("--sample-dt")->as<double>();

    const KineticMetrics metrics =
        evaluate_kinetics(dec.labeler, dec.kappa, protocol, options);

    const fs::path out = cmd.get_option("--output")->as<std::string>();
    fs::create_directories(out);
    write_metrics_json(out / "metrics.json", to_string(dec.method),
                       options.seed, &metrics, nullptr, nullptr);
    append_metrics_csv(out / "metrics.csv", to_string(dec.method),
                       options.seed, metrics);

    std::cout << "Q = " << metrics.q << "\n";
    std::cout << "tau";
    for (int i = 2; i <= dec.kappa; ++i) std::cout << "\tITS_" << i;
    std::cout << "\n";
    for (std::size_t t = 0; t < metrics.tau_list.size(); ++t) {
        std::cout << metrics.tau_list[t];
        for (Eigen::Index i = 0; i < metrics.its.its.cols(); ++i)
            std::cout << '\t' << metrics.its.its(static_cast<Eigen::Index>(t), i);
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_benchmark(const CLI::App& cmd) {
    BenchmarkSpec spec;
    Method dummy = Method::m3c;
    spec.params = collect_params(cmd, &dummy);
    spec.master_seed = spec.params.config.seed;

    spec.protocol = cmd.get_option("--model")->as<std::string>() == "model2"
                        ? model2_protocol()
                        : model1_protocol();
    if (cmd.count("--replicates"))
        spec.replicates = cmd.get_option("--replicates")->as<int>();
    std::stringstream methods(cmd.get_option("--methods")->as<std::string>());
    std::string name;
    while (std::getline(methods, name, ','))
        if (!name.empty()) spec.methods.push_back(method_from_string(name));
    if (spec.methods.empty())
        throw CLI::ValidationError("--methods", "no methods given");
    if (cmd.count("--ref-t-end"))
        spec.eval.reference_t_end = cmd.get_option("--ref-t-end")->as<double>();

    const fs::path out = cmd.get_option("--output")->as<std::string>();
    const BenchmarkReport report = run_benchmark(spec, out);
    const std::string table = format_benchmark_table(report);
    std::cout << table;
    fs::create_directories(out);
    std::ofstream(out / "summary.txt") << table;

    int failures = 0;
    for (const auto& outcome : report.outcomes)
        if (!outcome.ok) {
            ++failures;
            std::cerr << "replicate " << outcome.replicate << " "
                      << to_string(outcome.method) << " failed: "
                      << outcome.error << "\n";
        }
    return failures == 0 ? kExitOk : kExitWarnings;
}

int cmd_plot_data(const CLI::App& cmd) {
    const fs::path bundle_dir = cmd.get_option("--bundle")->as<std::string>();
    const Decomposition dec = load_bundle(bundle_dir);

    SimulationProtocol protocol =
        cmd.get_option("--model")->as<std::string>() == "model2"
            ? model2_protocol()
            : model1_protocol();
    EvalOptions options;
    options.seed = cmd.get_option("--seed")->as<std::uint64_t>();
    if (cmd.count("--t-end"))
        options.reference_t_end = cmd.get_option("--t-end")->as<double>();
    if (cmd.count("--tau-list"))
        options.tau_list =
            parse_double_list(cmd.get_option("--tau-list")->as<std::string>());
    if (options.tau_list.empty())
        for (int m = 1; m <= 8; ++m)
            options.tau_list.push_back(m * protocol.sample_dt);

    const fs::path out = cmd.get_option("--output")->as<std::string>();
    fs::create_directories(out);

    // decomposition timescale curves
    const KineticMetrics metrics =
        evaluate_kinetics(dec.labeler, dec.kappa, protocol, options);
    {
        std::ofstream csv(out / "its_curves.csv");
        csv << "method,tau,index,its\n";
        csv.precision(12);
        for (std::size_t t = 0; t < metrics.tau_list.size(); ++t)
            for (Eigen::Index i = 0; i < metrics.its.its.cols(); ++i)
                csv << to_string(dec.method) << ',' << metrics.tau_list[t]
                    << ',' << (i + 2) << ','
                    << metrics.its.its(static_cast<Eigen::Index>(t), i) << "\n";
    }

    // finely-binned reference timescales from the same run
    {
        const int ref_bins = cmd.count("--ref-bins")
                                 ? cmd.get_option("--ref-bins")->as<int>()
                                 : 50;
        SimulationProtocol ref = protocol;
        ref.n_trajs = 1;
        ref.t_end = options.reference_t_end;
        const auto run = simulate_protocol(
            ref, derive_seed(options.seed, {hash_tag("reference")}));
        const auto& traj = run.front();
        // fit the bins on a bounded subsample, then assign every frame
        const Eigen::Index stride =
            std::max<Eigen::Index>(1, traj.length() / 4000);
        Eigen::MatrixXd fit_points((traj.length() + stride - 1) / stride, 2);
        for (Eigen::Index i = 0, r = 0; i < traj.length(); i += stride, ++r)
            fit_points.row(r) = traj.points.row(i);
        const auto km = kmedoids(fit_points, ref_bins, 20, options.seed);
        Eigen::MatrixXd centers(ref_bins, 2);
        for (int b = 0; b < ref_bins; ++b)
            centers.row(b) = fit_points.row(km.medoids[b]);
        std::vector<int> bins(traj.length());
        for (Eigen::Index i = 0; i < traj.length(); ++i)
            bins[i] = nearest_row(centers, traj.points.row(i).transpose());
        const auto ref_its =
            implied_timescales({bins}, traj.dt, options.tau_list, ref_bins);
        std::ofstream csv(out / "reference_its.csv");
        csv << "tau,index,its\n";
        csv.precision(12);
        for (std::size_t t = 0; t < options.tau_list.size(); ++t)
            for (int i = 0; i + 1 < dec.kappa; ++i)
                csv << options.tau_list[t] << ',' << (i + 2) << ','
                    << ref_its.its(static_cast<Eigen::Index>(t), i) << "\n";
    }
    std::cout << "plot data written to " << out.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maximum-margin metastable state decomposition"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a benchmark diffusion");
    sim->add_option("--model", "model1 or model2")->required();
    sim->add_option("--trajs", "number of independent runs")->default_val("10");
    sim->add_option("--t-end", "run length in model time")->default_val("80");
    sim->add_option("--sample-dt", "sampling interval")->default_val("0.2");
    sim->add_option("--integrator-dt", "integration step (default per model)");
    sim->add_option("--x0-box", "uniform start box lo,hi");
    sim->add_option("--seed", "master seed")->default_val("1");
    sim->add_option("-o,--output", "output directory")->required();

    auto* dec = app.add_subcommand("decompose", "decompose trajectories");
    dec->add_option("--method", "m3c | mmc | kmedoids | pcca");
    dec->add_option("-i,--input", "trajectory CSV file or directory")
        ->required();
    dec->add_option("-o,--output", "bundle output directory")->required();
    add_method_flags(*dec);

    auto* ev = app.add_subcommand("evaluate", "evaluate a result bundle");
    ev->add_option("--bundle", "result bundle directory")->required();
    ev->add_option("--model", "reference model: model1 or model2")
        ->default_val("model1");
    ev->add_option("--t-end", "reference run length");
    ev->add_option("--sample-dt", "reference sampling interval");
    ev->add_option("--tau-list", "comma list of lag times");
    ev->add_option("--seed", "reference-run seed")->default_val("1");
    ev->add_option("-o,--output", "metrics output directory")->required();

    auto* bench = app.add_subcommand("benchmark", "replicated comparison");
    bench->add_option("--model", "model1 or model2")->default_val("model1");
    bench->add_option("--methods", "comma list of methods")
        ->default_val("m3c,kmedoids");
    bench->add_option("--replicates", "replicate count");
    bench->add_option("--ref-t-end", "reference run length");
    bench->add_option("-o,--output", "output directory")->required();
    add_method_flags(*bench);

    auto* plot = app.add_subcommand("plot-data", "timescale curve CSVs");
    plot->add_option("--bundle", "result bundle directory")->required();
    plot->add_option("--model", "model1 or model2")->default_val("model1");
    plot->add_option("--t-end", "reference run length");
    plot->add_option("--tau-list", "comma list of lag times");
    plot->add_option("--ref-bins", "bin count of the reference model");
    plot->add_option("--seed", "reference-run seed")->default_val("1");
    plot->add_option("-o,--output", "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(*sim);
        if (dec->parsed()) return cmd_decompose(*dec);
        if (ev->parsed()) return cmd_evaluate(*ev);
        if (bench->parsed()) return cmd_benchmark(*bench);
        if (plot->parsed()) return cmd_plot_data(*plot);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
