#include "m3c/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace m3c {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": cannot parse value '" + s + "'");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

std::vector<Trajectory> read_trajectories_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "traj_id" || header[1] != "t")
        throw std::runtime_error(path.string() +
                                 ": expected header traj_id,t,x1,...,xD");
    const std::size_t dim = header.size() - 2;

    struct Run {
        std::vector<double> times;
        std::vector<double> coords;
    };
    std::map<long, Run> runs;  // keyed by traj_id, insertion-ordered by id
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != header.size())
            throw std::runtime_error(where + ": expected " +
                                     std::to_string(header.size()) +
                                     " fields, got " +
                                     std::to_string(fields.size()));
        long id = static_cast<long>(parse_double(fields[0], where));
        double t = parse_double(fields[1], where);
        Run& run = runs[id];
        if (!run.times.empty() && t <= run.times.back())
            throw std::runtime_error(where + ": non-monotone time for traj_id " +
                                     std::to_string(id));
        run.times.push_back(t);
        for (std::size_t j = 0; j < dim; ++j)
            run.coords.push_back(parse_double(fields[2 + j], where));
    }
    if (runs.empty())
        throw std::runtime_error(path.string() + ": no data rows");

    std::vector<Trajectory> trajs;
    for (auto& [id, run] : runs) {
        Trajectory traj;
        traj.id = static_cast<int>(id);
        const Eigen::Index m = static_cast<Eigen::Index>(run.times.size());
        traj.dt = m > 1 ? run.times[1] - run.times[0] : 1.0;
        traj.points.resize(m, static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < m; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                traj.points(i, static_cast<Eigen::Index>(j)) =
                    run.coords[i * dim + j];
        validate(traj);
        trajs.push_back(std::move(traj));
    }
    return trajs;
}

void write_trajectories_csv(const std::vector<Trajectory>& trajs,
                            const std::filesystem::path& path) {
    if (trajs.empty())
        throw std::invalid_argument("write_trajectories_csv: no trajectories");
    const Eigen::Index dim = trajs.front().dim();
    auto out = open_out(path);
    out << "traj_id,t";
    for (Eigen::Index j = 0; j < dim; ++j) out << ",x" << (j + 1);
    out << "\n";
    for (const auto& traj : trajs) {
        if (traj.dim() != dim)
            throw std::invalid_argument(
                "write_trajectories_csv: inconsistent dimensions");
        for (Eigen::Index i = 0; i < traj.length(); ++i) {
            out << traj.id << ',' << format_double(i * traj.dt);
            for (Eigen::Index j = 0; j < dim; ++j)
                out << ',' << format_double(traj.points(i, j));
            out << "\n";
        }
    }
}

void write_trajectory_csv(const Trajectory& traj,
                          const std::filesystem::path& path) {
    write_trajectories_csv({traj}, path);
}

std::vector<Trajectory> read_trajectory_input(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("no .csv files in " + path.string());
        std::vector<Trajectory> all;
        for (const auto& f : files) {
            auto batch = read_trajectories_csv(f);
            all.insert(all.end(), batch.begin(), batch.end());
        }
        return all;
    }
    return read_trajectories_csv(path);
}

void write_labels_csv(const LabelAssignment& labels,
                      const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "pair_index,label\n";
    for (std::size_t i = 0; i < labels.y.size(); ++i)
        out << i << ',' << (labels.y[i] + 1) << "\n";
}

LabelAssignment read_labels_csv(const std::filesystem::path& path, int kappa) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line).size() != 2)
        throw std::runtime_error(path.string() +
                                 ": expected header pair_index,label");
    LabelAssignment labels;
    labels.kappa = kappa;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 2)
            throw std::runtime_error(where + ": expected 2 fields");
        labels.y.push_back(static_cast<int>(parse_double(fields[1], where)) - 1);
    }
    validate(labels);
    return labels;
}

void save_decision_rule(const DecisionRule& rule,
                        const std::filesystem::path& path) {
    json j;
    j["kappa"] = rule.kappa();
    j["d"] = rule.feature_map.output_dim;
    std::vector<double> w_flat;
    w_flat.reserve(rule.W.size());
    for (Eigen::Index i = 0; i < rule.W.rows(); ++i)
        for (Eigen::Index k = 0; k < rule.W.cols(); ++k)
            w_flat.push_back(rule.W(i, k));
    j["W"] = w_flat;
    j["b"] = std::vector<double>(rule.b.data(), rule.b.data() + rule.b.size());

    const FeatureMap& fm = rule.feature_map;
    json jmap;
    jmap["sigma"] = fm.sigma;
    jmap["d"] = fm.output_dim;
    jmap["input_dim"] = fm.input_dim;
    jmap["seed"] = fm.seed;
    std::vector<double> freq_flat;
    freq_flat.reserve(fm.frequencies.size());
    for (Eigen::Index i = 0; i < fm.frequencies.rows(); ++i)
        for (Eigen::Index k = 0; k < fm.frequencies.cols(); ++k)
            freq_flat.push_back(fm.frequencies(i, k));
    jmap["frequencies"] = freq_flat;
    jmap["phases"] = std::vector<double>(fm.phases.data(),
                                         fm.phases.data() + fm.phases.size());
    j["feature_map"] = jmap;

    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

DecisionRule load_decision_rule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    json j;
    in >> j;

    DecisionRule rule;
    const int kappa = j.at("kappa").get<int>();
    const int d = j.at("d").get<int>();
    auto w_flat = j.at("W").get<std::vector<double>>();
    if (static_cast<int>(w_flat.size()) != kappa * d)
        throw std::runtime_error(path.string() + ": W has wrong size");
    rule.W.resize(kappa, d);
    for (int i = 0; i < kappa; ++i)
        for (int k = 0; k < d; ++k) rule.W(i, k) = w_flat[i * d + k];
    auto b_vec = j.at("b").get<std::vector<double>>();
    rule.b = Eigen::Map<const Eigen::VectorXd>(b_vec.data(), b_vec.size());

    const auto& jmap = j.at("feature_map");
    FeatureMap fm;
    fm.sigma = jmap.at("sigma").get<double>();
    fm.output_dim = jmap.at("d").get<int>();
    fm.input_dim = jmap.at("input_dim").get<int>();
    fm.seed = jmap.at("seed").get<std::uint64_t>();
    auto freq_flat = jmap.at("frequencies").get<std::vector<double>>();
    fm.frequencies.resize(fm.output_dim, fm.input_dim);
    for (int i = 0; i < fm.output_dim; ++i)
        for (int k = 0; k < fm.input_dim; ++k)
            fm.frequencies(i, k) = freq_flat[i * fm.input_dim + k];
    auto phase_vec = jmap.at("phases").get<std::vector<double>>();
    fm.phases = Eigen::Map<const Eigen::VectorXd>(phase_vec.data(),
                                                  phase_vec.size());
    rule.feature_map = fm;
    return rule;
}

}  // namespace m3c
