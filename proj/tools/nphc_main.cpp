// nphc command line: simulate / cumulants / fit / eval / experiment.
// All file formats are plain CSV (full precision) plus JSON manifests, so
// staged runs and the single-process experiment command produce identical
// bytes.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nphc/experiment.hpp"
#include "nphc/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

void emit_error(const std::string& kind, const std::string& message) {
    ordered_json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << "\n";
}

nphc::KernelShape shape_from_string(const std::string& s) {
    if (s == "exponential") return nphc::KernelShape::Exponential;
    if (s == "rectangular") return nphc::KernelShape::Rectangular;
    if (s == "power_law") return nphc::KernelShape::PowerLaw;
    if (s == "zero") return nphc::KernelShape::Zero;
    throw nphc::ValidationError("unknown kernel shape '" + s + "'");
}

nphc::BoundaryMode boundary_from_string(const std::string& s) {
    if (s == "paper_exact") return nphc::BoundaryMode::PaperExact;
    if (s == "trimmed") return nphc::BoundaryMode::Trimmed;
    throw nphc::ValidationError("unknown boundary mode '" + s + "' (trimmed|paper_exact)");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw nphc::IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------------------
// Flag bundles shared between subcommands
// ---------------------------------------------------------------------------

struct ModelFlags {
    std::string preset = "custom";
    int dim = 10;
    std::string shape = "exponential";
    double alpha = 1.0 / 6.0;
    std::vector<double> betas{0.1, 1.0, 10.0};
    double gamma = 0.5;
    double mu = 0.0;
    double events_per_node = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 1;
    std::size_t max_events = 20'000'000;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "rect10|plaw10|exp10|exp100|custom")
            ->default_str("custom");
        cmd->add_option("--dim", dim, "node count for custom models");
        cmd->add_option("--shape", shape, "exponential|rectangular|power_law|zero");
        cmd->add_option("--alpha", alpha, "kernel integral on the blocks");
        cmd->add_option("--betas", betas, "three block time scales")->expected(3);
        cmd->add_option("--gamma", gamma, "delay (rectangular) or tail exponent (power law)");
        cmd->add_option("--mu", mu, "uniform baseline intensity; overrides --events-per-node");
        cmd->add_option("--events-per-node", events_per_node, "target expected events per node");
        cmd->add_option("--horizon", horizon, "simulation horizon T");
        cmd->add_option("--seed", seed, "simulation seed");
        cmd->add_option("--max-events", max_events, "safety cap on total events");
    }

    nphc::ExperimentConfig to_config() const {
        nphc::ExperimentConfig cfg = nphc::preset_config(nphc::preset_from_string(preset));
        if (cfg.preset == nphc::Preset::Custom) {
            cfg.dim = dim;
            cfg.shape = shape_from_string(shape);
            cfg.alpha = alpha;
            cfg.gamma = gamma;
        }
        if (betas.size() == 3) cfg.betas = {betas[0], betas[1], betas[2]};
        if (mu > 0.0) cfg.mu = mu;
        if (events_per_node > 0.0) cfg.events_per_node = events_per_node;
        if (horizon > 0.0) cfg.horizon = horizon;
        cfg.seed = seed;
        cfg.max_events = max_events;
        return cfg;
    }
};

struct CumulantFlags {
    double half_width = 200.0;
    std::string boundary = "trimmed";
    bool no_symmetrize = false;
    int threads = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--half-width,-H", half_width, "cumulant window half-width H");
        cmd->add_option("--boundary", boundary, "trimmed|paper_exact");
        cmd->add_flag("--no-symmetrize", no_symmetrize, "keep raw asymmetric estimators");
        cmd->add_option("--threads", threads, "worker threads (0 = NPHC_THREADS or hardware)");
    }

    nphc::CumulantConfig to_config() const {
        nphc::CumulantConfig cfg;
        cfg.half_width = half_width;
        cfg.boundary = boundary_from_string(boundary);
        cfg.symmetrize = !no_symmetrize;
        cfg.threads = threads;
        return cfg;
    }
};

struct SolverFlags {
    int max_iters = 20000;
    double learning_rate = 0.1;
    double adagrad_epsilon = 1e-8;
    double grad_tol = 1e-8;
    double kappa = -1.0;
    int trace_stride = 1;
    int random_restarts = 0;
    bool clip_negatives = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--max-iters", max_iters, "iteration cap");
        cmd->add_option("--learning-rate", learning_rate, "AdaGrad base step");
        cmd->add_option("--adagrad-epsilon", adagrad_epsilon, "AdaGrad denominator floor");
        cmd->add_option("--grad-tol", grad_tol, "stop once gradient norm drops below");
        cmd->add_option("--kappa", kappa, "override the cumulant weighting in [0,1]");
        cmd->add_option("--trace-stride", trace_stride, "record loss every N iterations");
        cmd->add_option("--random-restarts", random_restarts,
                        "reserved; only the deterministic start is implemented");
        cmd->add_flag("--clip-negatives", clip_negatives, "clip negative entries of G_hat at 0");
    }

    nphc::SolveConfig to_config() const {
        if (random_restarts != 0)
            throw nphc::ValidationError(
                "--random-restarts is reserved for a future version; only the deterministic "
                "spectral start is implemented");
        nphc::SolveConfig cfg;
        cfg.max_iters = max_iters;
        cfg.learning_rate = learning_rate;
        cfg.adagrad_epsilon = adagrad_epsilon;
        cfg.grad_tol = grad_tol;
        if (kappa >= 0.0) cfg.kappa_override = kappa;
        cfg.trace_stride = trace_stride;
        return cfg;
    }
};

struct IngestFlags {
    std::string events_path;
    std::string format = "csv";
    double horizon = 0.0;
    int nodes = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--events", events_path, "event file")->required();
        cmd->add_option("--format", format, "csv|jsonl");
        cmd->add_option("--horizon", horizon, "observation horizon T (default: max timestamp)");
        cmd->add_option("--nodes", nodes, "node count (default: max node id + 1)");
    }

    nphc::EventSequences load() const {
        nphc::IngestOptions opts;
        if (horizon > 0.0) opts.horizon = horizon;
        if (nodes > 0) opts.nodes = nodes;
        return nphc::ingest_events(events_path, nphc::event_format_from_string(format), opts);
    }
};

// ---------------------------------------------------------------------------
// Pipeline stages (shared by the individual commands and `experiment`)
// ---------------------------------------------------------------------------

ordered_json model_manifest(const nphc::ExperimentConfig& cfg, const nphc::HawkesModel& model,
                            const nphc::SimulationResult& sim) {
    const auto sizes = nphc::default_block_sizes(cfg.dim);
    ordered_json j;
    j["preset"] = nphc::to_string(cfg.preset);
    j["dim"] = cfg.dim;
    j["shape"] = nphc::to_string(cfg.shape);
    j["alpha"] = cfg.alpha;
    j["betas"] = {cfg.betas[0], cfg.betas[1], cfg.betas[2]};
    j["gamma"] = cfg.gamma;
    j["block_sizes"] = {sizes[0], sizes[1], sizes[2]};
    j["mu"] = model.mu[0];
    j["horizon"] = cfg.horizon;
    j["seed"] = cfg.seed;
    j["max_events"] = cfg.max_events;
    j["total_events"] = sim.events.total_events();
    j["truncated"] = sim.truncated;
    return j;
}

void stage_simulate(const nphc::ExperimentConfig& cfg, const std::string& dir) {
    ensure_dir(dir);
    const nphc::HawkesModel model = nphc::build_model(cfg);
    nphc::SimulationConfig sim_cfg;
    sim_cfg.horizon = cfg.horizon;
    sim_cfg.seed = cfg.seed;
    sim_cfg.max_events = cfg.max_events;
    const auto sim = nphc::simulate(model, sim_cfg);

    nphc::write_events_csv(join(dir, "events.csv"), sim.events);
    nphc::write_matrix_csv(join(dir, "G_true.csv"), model.integral_matrix());
    nphc::write_json(join(dir, "model.json"), model_manifest(cfg, model, sim));
    if (sim.truncated)
        std::cerr << "warning: event cap reached, sample truncated at "
                  << sim.events.total_events() << " events\n";
}

void stage_cumulants(const nphc::EventSequences& events, const nphc::CumulantConfig& cfg,
                     const std::string& dir) {
    ensure_dir(dir);
    const auto cum = nphc::estimate_cumulants(events, cfg);
    nphc::write_vector_csv(join(dir, "Lambda.csv"), cum.Lambda);
    nphc::write_matrix_csv(join(dir, "C.csv"), cum.C);
    nphc::write_matrix_csv(join(dir, "Kc.csv"), cum.Kc);
    ordered_json j;
    j["half_width"] = cum.H_used;
    j["horizon"] = cum.T_used;
    j["boundary"] = nphc::to_string(cfg.boundary);
    j["symmetrize"] = cfg.symmetrize;
    j["dim"] = events.dim();
    j["total_events"] = events.total_events();
    nphc::write_json(join(dir, "cumulants.json"), j);
}

nphc::IntegratedCumulants load_cumulants(const std::string& dir) {
    nphc::IntegratedCumulants cum;
    cum.Lambda = nphc::read_vector_csv(join(dir, "Lambda.csv"));
    cum.C = nphc::read_matrix_csv(join(dir, "C.csv"));
    cum.Kc = nphc::read_matrix_csv(join(dir, "Kc.csv"));
    if (fs::exists(join(dir, "cumulants.json"))) {
        const auto j = nphc::read_json(join(dir, "cumulants.json"));
        cum.H_used = j.value("half_width", 0.0);
        cum.T_used = j.value("horizon", 0.0);
    }
    return cum;
}

void stage_fit(const nphc::IntegratedCumulants& cum, const nphc::SolveConfig& solve_cfg,
               bool clip_negatives, const std::string& dir) {
    ensure_dir(dir);
    const auto res = nphc::solve(cum, solve_cfg);
    nphc::Matrix G = res.G_hat;
    if (clip_negatives) G = G.cwiseMax(0.0);

    nphc::write_matrix_csv(join(dir, "G_hat.csv"), G);
    nphc::write_matrix_csv(join(dir, "R_hat.csv"), res.R_hat);
    nphc::write_vector_csv(join(dir, "mu_hat.csv"), res.mu_hat);

    std::ofstream trace(join(dir, "loss_trace.csv"));
    if (!trace) throw nphc::IoError("cannot open loss_trace.csv for writing");
    trace << "iteration,loss\n";
    for (const auto& [it, value] : res.loss_trace)
        trace << it << ',' << nphc::detail::format_double(value) << '\n';

    ordered_json j;
    j["kappa"] = res.kappa;
    j["iterations_used"] = res.iterations_used;
    j["final_grad_norm"] = res.final_grad_norm;
    j["final_loss"] = res.loss_trace.back().second;
    j["condition_number_R"] = res.condition_number_R;
    j["clipped_eigenvalues"] = res.clipped_eigenvalues;
    j["clip_negatives"] = clip_negatives;
    j["max_iters"] = solve_cfg.max_iters;
    j["learning_rate"] = solve_cfg.learning_rate;
    j["adagrad_epsilon"] = solve_cfg.adagrad_epsilon;
    j["grad_tol"] = solve_cfg.grad_tol;
    j["kappa_override"] = solve_cfg.kappa_override.has_value();
    j["trace_stride"] = solve_cfg.trace_stride;
    j["seed"] = solve_cfg.seed;
    nphc::write_json(join(dir, "fit.json"), j);
}

ordered_json stage_eval(const std::string& truth_path, const std::string& estimate_path) {
    const auto start = std::chrono::steady_clock::now();
    const nphc::Matrix truth = nphc::read_matrix_csv(truth_path);
    const nphc::Matrix estimate = nphc::read_matrix_csv(estimate_path);
    ordered_json j;
    j["rel_err"] = nphc::rel_err(truth, estimate);
    j["mrank_corr"] = nphc::mean_rank_corr(truth, estimate);
    j["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return j;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_cumulants(const IngestFlags& ingest, const CumulantFlags& flags,
                  const std::vector<double>& h_grid, const std::string& out_dir) {
    const auto events = ingest.load();
    if (!h_grid.empty()) {
        std::printf("%12s %14s %14s %14s\n", "H", "mean_diag_C", "mean_offdiag_C", "frobenius_C");
        for (double h : h_grid) {
            auto cfg = flags.to_config();
            cfg.half_width = h;
            const auto C = nphc::estimate_covariance(events, cfg);
            const double diag = C.diagonal().mean();
            const auto d = C.rows();
            const double off =
                d > 1 ? (C.sum() - C.diagonal().sum()) / static_cast<double>(d * (d - 1)) : 0.0;
            std::printf("%12g %14.6g %14.6g %14.6g\n", h, diag, off, C.norm());
        }
        if (out_dir.empty()) return 0;
    }
    if (out_dir.empty()) throw nphc::ValidationError("--out is required");
    stage_cumulants(events, flags.to_config(), out_dir);
    return 0;
}

int cmd_experiment(const ModelFlags& model_flags, const CumulantFlags& cum_flags,
                   const SolverFlags& solver_flags, int num_seeds, const std::string& out_dir) {
    ensure_dir(out_dir);
    const auto base_cfg = model_flags.to_config();

    std::vector<ordered_json> per_seed;
    for (int s = 0; s < num_seeds; ++s) {
        auto cfg = base_cfg;
        cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(s);
        const std::string dir =
            num_seeds == 1 ? out_dir : join(out_dir, "seed_" + std::to_string(cfg.seed));

        stage_simulate(cfg, dir);
        const auto events = nphc::ingest_events(join(dir, "events.csv"), nphc::EventFormat::Csv,
                                                {cfg.horizon, cfg.dim});
        stage_cumulants(events, cum_flags.to_config(), dir);
        stage_fit(load_cumulants(dir), solver_flags.to_config(), solver_flags.clip_negatives, dir);
        auto eval = stage_eval(join(dir, "G_true.csv"), join(dir, "G_hat.csv"));
        eval["seed"] = cfg.seed;
        per_seed.push_back(eval);
    }

    // summary over seeds plus a text heatmap of the last fit
    std::vector<double> errs, ranks;
    for (const auto& e : per_seed) {
        errs.push_back(e["rel_err"].get<double>());
        ranks.push_back(e["mrank_corr"].get<double>());
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    std::string summary;
    summary += "preset: " + std::string(nphc::to_string(base_cfg.preset)) + "\n";
    summary += "seeds: " + std::to_string(num_seeds) + "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %12s %12s\n", "seed", "rel_err", "mrank_corr");
    summary += line;
    for (const auto& e : per_seed) {
        std::snprintf(line, sizeof(line), "%-8llu %12.6f %12.6f\n",
                      static_cast<unsigned long long>(e["seed"].get<std::uint64_t>()),
                      e["rel_err"].get<double>(), e["mrank_corr"].get<double>());
        summary += line;
    }
    std::snprintf(line, sizeof(line), "%-8s %12.6f %12.6f\n", "median", median(errs), median(ranks));
    summary += line;

    const std::string last_dir =
        num_seeds == 1 ? out_dir
                       : join(out_dir, "seed_" + std::to_string(base_cfg.seed + num_seeds - 1));
    const auto G_true = nphc::read_matrix_csv(join(last_dir, "G_true.csv"));
    const auto G_hat = nphc::read_matrix_csv(join(last_dir, "G_hat.csv"));
    summary += "\n" + nphc::render_heatmap(G_true, G_hat);

    std::ofstream sf(join(out_dir, "summary.txt"));
    if (!sf) throw nphc::IoError("cannot write summary.txt");
    sf << summary;
    std::cout << summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granger-causality recovery for multivariate Hawkes processes via integrated "
                 "cumulant matching"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags take precedence");

    // --- simulate ---
    auto* sim_cmd = app.add_subcommand("simulate", "generate a sample path of a block model");
    ModelFlags sim_model;
    sim_model.attach(sim_cmd);
    std::string sim_out;
    sim_cmd->add_option("--out", sim_out, "output directory")->required();

    // --- cumulants ---
    auto* cum_cmd = app.add_subcommand("cumulants", "estimate integrated cumulants from events");
    IngestFlags cum_ingest;
    cum_ingest.attach(cum_cmd);
    CumulantFlags cum_flags;
    cum_flags.attach(cum_cmd);
    std::vector<double> h_grid;
    cum_cmd->add_option("--h-grid", h_grid, "tabulate the covariance over these H values");
    std::string cum_out;
    cum_cmd->add_option("--out", cum_out, "output directory");

    // --- fit ---
    auto* fit_cmd = app.add_subcommand("fit", "recover G from estimated cumulants");
    std::string fit_in;
    fit_cmd->add_option("--cumulants", fit_in, "directory with Lambda.csv, C.csv, Kc.csv")
        ->required();
    SolverFlags fit_solver;
    fit_solver.attach(fit_cmd);
    std::string fit_out;
    fit_cmd->add_option("--out", fit_out, "output directory")->required();

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "compare an estimate against a truth matrix");
    std::string truth_path, estimate_path;
    eval_cmd->add_option("--truth", truth_path, "truth matrix CSV")->required();
    eval_cmd->add_option("--estimate", estimate_path, "estimate matrix CSV")->required();

    // --- experiment ---
    auto* exp_cmd = app.add_subcommand("experiment", "simulate, estimate, fit and evaluate");
    ModelFlags exp_model;
    exp_model.attach(exp_cmd);
    CumulantFlags exp_cum;
    exp_cum.attach(exp_cmd);
    SolverFlags exp_solver;
    exp_solver.attach(exp_cmd);
    int num_seeds = 1;
    exp_cmd->add_option("--seeds", num_seeds, "number of seeded replicas")->check(CLI::PositiveNumber);
    std::string exp_out;
    exp_cmd->add_option("--out", exp_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("cli_parse", e.what());
        return kExitValidation;
    }

    try {
        if (sim_cmd->parsed()) {
            auto cfg = sim_model.to_config();
            stage_simulate(cfg, sim_out);
            return 0;
        }
        if (cum_cmd->parsed()) return cmd_cumulants(cum_ingest, cum_flags, h_grid, cum_out);
        if (fit_cmd->parsed()) {
            stage_fit(load_cumulants(fit_in), fit_solver.to_config(), fit_solver.clip_negatives,
                      fit_out);
            return 0;
        }
        if (eval_cmd->parsed()) {
            std::cout << stage_eval(truth_path, estimate_path).dump() << "\n";
            return 0;
        }
        if (exp_cmd->parsed())
            return cmd_experiment(exp_model, exp_cum, exp_solver, num_seeds, exp_out);
    } catch (const nphc::ValidationError& e) {
        emit_error("validation", e.what());
        return kExitValidation;
    } catch (const nphc::IoError& e) {
        emit_error("io", e.what());
        return kExitIo;
    } catch (const nphc::NumericError& e) {
        emit_error("numeric", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 1;
    }
    return 0;
}
