#include "m3c/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "m3c/rng.hpp"

namespace m3c {

namespace {

constexpr double kPi = std::numbers::pi;

double model1_potential(const Eigen::Vector2d& x) {
    double u = 0.8 * std::pow(x(0), 4) + (16.0 / 9.0) * x(1) * x(1);
    for (double mu1 : {-1.0, 0.0, 1.0})
        for (double mu2 : {-0.125, 0.125}) {
            const double dx = x(0) - mu1;
            const double dy = x(1) / 6.0 - mu2;
            u -= 8.0 * std::exp(-8.0 * dx * dx - 200.0 * dy * dy);
        }
    return u;
}

Eigen::Vector2d model1_gradient(const Eigen::Vector2d& x) {
    Eigen::Vector2d g(3.2 * std::pow(x(0), 3), (32.0 / 9.0) * x(1));
    for (double mu1 : {-1.0, 0.0, 1.0})
        for (double mu2 : {-0.125, 0.125}) {
            const double dx = x(0) - mu1;
            const double dy = x(1) / 6.0 - mu2;
            const double e = std::exp(-8.0 * dx * dx - 200.0 * dy * dy);
            g(0) += 128.0 * dx * e;
            g(1) += (3200.0 / 6.0) * dy * e;
        }
    return g;
}

constexpr double kGamma = 1.67;

double model2_potential(const Eigen::Vector2d& x) {
    const double r = x.norm();
    const double theta = std::atan2(x(1), x(0));
    const double ring = r - 1.6;
    const double gap = std::max(theta - kPi / 2.0, 0.0);
    double u = -4.0 * kGamma * std::exp(-16.0 * (ring * ring + gap * gap));
    const double dx1 = x(0) + 1.0;
    const double up = x(1) - 0.5;
    const double dn = x(1) + 0.5;
    u += -4.0 * kGamma * std::exp(-0.8 * dx1 * dx1 - 32.0 * up * up);
    u += -4.0 * kGamma * std::exp(-0.8 * dx1 * dx1 - 32.0 * dn * dn);
    u += 0.2 * kGamma * (std::pow(x(0), 4) + std::pow(x(1), 4));
    return u;
}

Eigen::Vector2d model2_gradient(const Eigen::Vector2d& x) {
    Eigen::Vector2d g(0.8 * kGamma * std::pow(x(0), 3),
                      0.8 * kGamma * std::pow(x(1), 3));

    const double r = x.norm();
    const double theta = std::atan2(x(1), x(0));
    const double ring = r - 1.6;
    const double gap = std::max(theta - kPi / 2.0, 0.0);
    const double t = -4.0 * kGamma * std::exp(-16.0 * (ring * ring + gap * gap));
    if (r > 1e-12) {
        // subgradient 0 at the origin and on the gap boundary
        Eigen::Vector2d dexp = -16.0 * 2.0 * ring * (x / r);
        if (gap > 0.0) {
            const Eigen::Vector2d dtheta(-x(1) / (r * r), x(0) / (r * r));
            dexp += -16.0 * 2.0 * gap * dtheta;
        }
        g += t * dexp;
    }

    const double dx1 = x(0) + 1.0;
    const double up = x(1) - 0.5;
    const double dn = x(1) + 0.5;
    const double wu = -4.0 * kGamma * std::exp(-0.8 * dx1 * dx1 - 32.0 * up * up);
    const double wd = -4.0 * kGamma * std::exp(-0.8 * dx1 * dx1 - 32.0 * dn * dn);
    g(0) += wu * (-1.6 * dx1) + wd * (-1.6 * dx1);
    g(1) += wu * (-64.0 * up) + wd * (-64.0 * dn);
    return g;
}

}  // namespace

DiffusionModel make_model1() {
    DiffusionModel model;
    model.name = "model1";
    model.potential = model1_potential;
    model.gradient = model1_gradient;
    model.drift = [](const Eigen::Vector2d& x) {
        const Eigen::Vector2d g = model1_gradient(x);
        return Eigen::Vector2d(-0.25 * g(0), -9.0 * g(1));
    };
    model.diffusion << std::sqrt(2.0) / 2.0, 0.0, 0.0, 3.0 * std::sqrt(2.0);
    model.default_integrator_dt = 1e-3;
    return model;
}

DiffusionModel make_model2() {
    DiffusionModel model;
    model.name = "model2";
    model.potential = model2_potential;
    model.gradient = model2_gradient;
    model.drift = [](const Eigen::Vector2d& x) {
        return (-1.0 / kGamma) * model2_gradient(x);
    };
    model.diffusion = std::sqrt(2.0 / kGamma) * Eigen::Matrix2d::Identity();
    model.default_integrator_dt = 1e-4;
    return model;
}

DiffusionModel diffusion_model(const std::string& name) {
    if (name == "model1") return make_model1();
    if (name == "model2") return make_model2();
    throw std::invalid_argument("unknown diffusion model: " + name);
}

Trajectory simulate(const DiffusionModel& model, const Eigen::Vector2d& x0,
                    double t_end, double sample_dt, double integrator_dt,
                    std::uint64_t seed, int traj_id) {
    if (sample_dt <= 0.0 || t_end <= 0.0 || integrator_dt <= 0.0)
        throw std::invalid_argument("simulate: times must be positive");
    if (integrator_dt > sample_dt)
        throw std::invalid_argument("simulate: integrator_dt > sample_dt");
    const long steps_per_sample =
        static_cast<long>(std::llround(sample_dt / integrator_dt));
    if (std::abs(steps_per_sample * integrator_dt - sample_dt) >
        1e-9 * sample_dt)
        throw std::invalid_argument(
            "simulate: sample_dt must be a multiple of integrator_dt");
    const long n_samples = static_cast<long>(std::llround(t_end / sample_dt));
    if (std::abs(n_samples * sample_dt - t_end) > 1e-9 * t_end)
        throw std::invalid_argument(
            "simulate: t_end must be a multiple of sample_dt");

    const double h = sample_dt / static_cast<double>(steps_per_sample);
    const double sqrt_h = std::sqrt(h);

    Trajectory traj;
    traj.id = traj_id;
    traj.dt = sample_dt;
    traj.points.resize(n_samples + 1, 2);

    auto rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::Vector2d x = x0;
    traj.points.row(0) = x.transpose();
    for (long s = 1; s <= n_samples; ++s) {
        for (long k = 0; k < steps_per_sample; ++k) {
            const Eigen::Vector2d z(normal(rng), normal(rng));
            x += model.drift(x) * h + model.diffusion * (sqrt_h * z);
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6)
                throw std::runtime_error(
                    "simulate: numerical blow-up at t ~= " +
                    std::to_string((s - 1) * sample_dt + (k + 1) * h));
        }
        traj.points.row(s) = x.transpose();
    }
    return traj;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
    const Eigen::Index k = P.rows();
    if (P.cols() != k)
        throw std::invalid_argument("stationary_distribution: P not square");
    Eigen::MatrixXd A(k + 1, k);
    A.topRows(k) = P.transpose() - Eigen::MatrixXd::Identity(k, k);
    A.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return pi;
}

namespace {

void validate_stochastic(const Eigen::MatrixXd& P) {
    if (P.rows() != P.cols() || P.rows() < 1)
        throw std::invalid_argument("label chain: P must be square");
    if (P.minCoeff() < 0.0)
        throw std::invalid_argument("label chain: negative entry in P");
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
            throw std::invalid_argument("label chain: row " + std::to_string(i) +
                                        " of P does not sum to 1");
}

int sample_categorical(const Eigen::VectorXd& p, double u) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        acc += p(k);
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(p.size()) - 1;
}

}  // namespace

std::vector<int> generate_label_chain(const LabelChainSpec& spec) {
    validate_stochastic(spec.P);
    if (spec.length < 1)
        throw std::invalid_argument("label chain: length must be >= 1");
    const Eigen::VectorXd pi = stationary_distribution(spec.P);
    auto rng = make_engine(spec.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<int> y(spec.length);
    y[0] = sample_categorical(pi, uniform(rng));
    for (long n = 1; n < spec.length; ++n)
        y[n] = sample_categorical(spec.P.row(y[n - 1]).transpose(),
                                  uniform(rng));
    return y;
}

Eigen::MatrixXd benchmark_chain_matrix(int kappa) {
    Eigen::MatrixXd P(kappa, kappa);
    switch (kappa) {
        case 2:
            P << 0.97, 0.03,
                 0.03, 0.97;
            break;
        case 3:
            P << 0.97, 0.015, 0.015,
                 0.025, 0.95, 0.025,
                 0.02, 0.02, 0.96;
            break;
        case 4:
            P << 0.9517, 0.0198, 0.0138, 0.0147,
                 0.0198, 0.9509, 0.0134, 0.0159,
                 0.0138, 0.0134, 0.9535, 0.0193,
                 0.0147, 0.0159, 0.0193, 0.9501;
            break;
        default:
            throw std::invalid_argument(
                "benchmark_chain_matrix: kappa must be 2, 3 or 4");
    }
    return P;
}

LabeledSequence make_labeled_sequence(const LabelChainSpec& spec,
                                      const std::vector<Eigen::MatrixXd>& pools,
                                      int max_retries) {
    const int kappa = static_cast<int>(spec.P.rows());
    if (static_cast<int>(pools.size()) != kappa)
        throw std::invalid_argument("make_labeled_sequence: need one pool per class");
    for (const auto& pool : pools)
        if (pool.rows() < 1)
            throw std::invalid_argument("make_labeled_sequence: empty pool");

    for (int attempt = 0; attempt < max_retries; ++attempt) {
        LabelChainSpec trial = spec;
        trial.seed = derive_seed(spec.seed, {hash_tag("chain"),
                                             static_cast<std::uint64_t>(attempt)});
        std::vector<int> labels = generate_label_chain(trial);
        std::vector<long> demand(kappa, 0);
        for (int label : labels) ++demand[label];
        bool fits = true;
        for (int k = 0; k < kappa; ++k)
            if (demand[k] > pools[k].rows()) fits = false;
        if (!fits) continue;

        auto rng = make_engine(derive_seed(trial.seed, {hash_tag("picks")}));
        LabeledSequence seq;
        seq.labels = std::move(labels);
        seq.patterns.resize(spec.length, pools[0].cols());
        seq.chosen.assign(kappa, {});
        std::vector<std::vector<long>> order(kappa);
        std::vector<std::size_t> next(kappa, 0);
        for (int k = 0; k < kappa; ++k) {
            order[k].resize(pools[k].rows());
            std::iota(order[k].begin(), order[k].end(), 0L);
            std::shuffle(order[k].begin(), order[k].end(), rng);
        }
        for (long n = 0; n < spec.length; ++n) {
            const int k = seq.labels[n];
            const long row = order[k][next[k]++];
            seq.patterns.row(n) = pools[k].row(row);
            seq.chosen[k].push_back(row);
        }
        return seq;
    }
    throw std::runtime_error(
        "make_labeled_sequence: retries exhausted; pools too small for the "
        "chain demand");
}

}  // namespace m3c
