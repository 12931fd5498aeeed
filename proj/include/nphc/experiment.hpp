#pragma once

#include <array>
#include <chrono>
#include <string>

#include "nphc/cumulants.hpp"
#include "nphc/estimator.hpp"
#include "nphc/metrics.hpp"
#include "nphc/simulate.hpp"

namespace nphc {

enum class Preset { Rect10, PLaw10, Exp10, Exp100, Custom };

inline const char* to_string(Preset p) {
    switch (p) {
        case Preset::Rect10: return "rect10";
        case Preset::PLaw10: return "plaw10";
        case Preset::Exp10: return "exp10";
        case Preset::Exp100: return "exp100";
        case Preset::Custom: return "custom";
    }
    return "?";
}

inline Preset preset_from_string(const std::string& s) {
    if (s == "rect10") return Preset::Rect10;
    if (s == "plaw10") return Preset::PLaw10;
    if (s == "exp10") return Preset::Exp10;
    if (s == "exp100") return Preset::Exp100;
    if (s == "custom") return Preset::Custom;
    throw ValidationError("unknown preset '" + s + "'");
}

/// Everything needed to run one end-to-end recovery experiment. Preset
/// values fill in the ground-truth model; every field can be overridden.
struct ExperimentConfig {
    Preset preset = Preset::Custom;

    // ground truth
    int dim = 10;
    KernelShape shape = KernelShape::Exponential;
    double alpha = 1.0 / 6.0;
    std::array<double, 3> betas{0.1, 1.0, 10.0};
    double gamma = 0.5;

    // simulation scale: uniform baseline, either given directly or derived
    // so the expected event count per node matches events_per_node
    double mu = 0.0;  // <= 0 means derive from events_per_node
    double events_per_node = 5e4;
    double horizon = 25000.0;
    std::uint64_t seed = 1;
    std::size_t max_events = 20'000'000;

    CumulantConfig cumulants{/*half_width=*/200.0, BoundaryMode::Trimmed, /*symmetrize=*/true,
                             /*threads=*/0};
    SolveConfig solver;
    bool clip_negative_g = false;  // optional post-processing of G_hat
};

inline ExperimentConfig preset_config(Preset p) {
    ExperimentConfig cfg;
    cfg.preset = p;
    cfg.solver.trace_stride = 50;
    switch (p) {
        case Preset::Rect10:
            cfg.shape = KernelShape::Rectangular;
            break;
        case Preset::PLaw10:
            cfg.shape = KernelShape::PowerLaw;
            break;
        case Preset::Exp10:
            cfg.shape = KernelShape::Exponential;
            break;
        case Preset::Exp100:
            cfg.shape = KernelShape::Exponential;
            cfg.dim = 100;
            cfg.alpha = 1.0 / 10.0;
            cfg.events_per_node = 1e4;
            break;
        case Preset::Custom:
            break;
    }
    return cfg;
}

/// Ground-truth model for a config: block model plus the uniform baseline
/// that hits the requested expected event count per node.
inline HawkesModel build_model(const ExperimentConfig& cfg) {
    HawkesModel model = make_block_model(cfg.dim, cfg.shape, cfg.alpha, cfg.betas, cfg.gamma);
    double mu0 = cfg.mu;
    if (!(mu0 > 0.0)) {
        const Vector lambda_unit = theoretical_mean_intensity(model);  // baseline 1 everywhere
        mu0 = cfg.events_per_node * cfg.dim / (cfg.horizon * lambda_unit.sum());
    }
    model.mu = Vector::Constant(cfg.dim, mu0);
    return model;
}

struct ExperimentResult {
    HawkesModel model;
    Matrix G_true;
    SimulationResult sim;
    IntegratedCumulants cumulants;
    SolveResult fit;
    Matrix G_hat;  // after optional clipping
    double rel_err = 0.0;
    double mrank_corr = 0.0;
    double simulate_seconds = 0.0;
    double cumulants_seconds = 0.0;
    double fit_seconds = 0.0;
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// simulate -> estimate cumulants -> fit -> evaluate, all in memory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.model = build_model(cfg);
    res.G_true = res.model.integral_matrix();

    SimulationConfig sim_cfg;
    sim_cfg.horizon = cfg.horizon;
    sim_cfg.seed = cfg.seed;
    sim_cfg.max_events = cfg.max_events;

    detail::Stopwatch sim_clock;
    res.sim = simulate(res.model, sim_cfg);
    res.simulate_seconds = sim_clock.seconds();

    detail::Stopwatch cum_clock;
    res.cumulants = estimate_cumulants(res.sim.events, cfg.cumulants);
    res.cumulants_seconds = cum_clock.seconds();

    detail::Stopwatch fit_clock;
    res.fit = solve(res.cumulants, cfg.solver);
    res.fit_seconds = fit_clock.seconds();

    res.G_hat = res.fit.G_hat;
    if (cfg.clip_negative_g) res.G_hat = res.G_hat.cwiseMax(0.0);
    res.rel_err = rel_err(res.G_true, res.G_hat);
    res.mrank_corr = mean_rank_corr(res.G_true, res.G_hat);
    return res;
}

/// Side-by-side text heatmap of two matrices on a shared scale.
inline std::string render_heatmap(const Matrix& truth, const Matrix& estimate) {
    static const char* shades[] = {" ", "░", "▒", "▓", "█"};
    const double lo = std::min(0.0, std::min(truth.minCoeff(), estimate.minCoeff()));
    const double hi = std::max({truth.maxCoeff(), estimate.maxCoeff(), lo + 1e-12});
    auto shade = [&](double v) {
        int k = static_cast<int>((v - lo) / (hi - lo) * 4.999);
        return shades[std::clamp(k, 0, 4)];
    };
    std::string out = "true G (left) vs estimated G (right), scale [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]\n";
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        for (Eigen::Index j = 0; j < truth.cols(); ++j) out += shade(truth(i, j));
        out += "  |  ";
        for (Eigen::Index j = 0; j < estimate.cols(); ++j) out += shade(estimate(i, j));
        out += '\n';
    }
    return out;
}

}  // namespace nphc
