// qglms command-line interface.
//
//   qglms gen-graph --n 50 --p 0.2 --seed 7 --out edges.csv
//   qglms run [--config cfg.json] [--algorithm qglms|rlms|both] [--strategy maxdet|random]
//             [--theory] [--out-dir d] [--force] [--workers k] [--per-trial]
//   qglms theory [--config cfg.json] --out curve.csv [--report stability.json]
//   qglms sweep --param budget --values 10,20,30 [--config cfg.json] [--out table.csv]
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 unrecoverable sampling set without --force.

#include "qglms/csv.hpp"
#include "qglms/harness.hpp"
#include "qglms/spectral.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUnrecoverable = 3;

struct Overrides {
    std::string config_path;
    std::string algorithm;
    std::string strategy;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> iters;
    std::optional<double> mu_r;
    bool graph_per_trial = false;
};

void add_config_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "JSON experiment configuration");
    cmd->add_option("--algorithm", o.algorithm, "qglms|rlms|both");
    cmd->add_option("--strategy", o.strategy, "maxdet|random");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--trials", o.trials, "number of Monte-Carlo trials");
    cmd->add_option("--iters", o.iters, "iterations per trial");
    cmd->add_option("--mu-r", o.mu_r, "explicit RLMS step size (default 4 mu)");
    cmd->add_flag("--graph-per-trial", o.graph_per_trial, "draw a new graph for every trial");
}

qglms::ExperimentConfig resolve_config(const Overrides& o)
{
    qglms::ExperimentConfig c;
    if (!o.config_path.empty()) c = qglms::load_config(o.config_path);
    nlohmann::json patch = nlohmann::json::object();
    if (!o.algorithm.empty()) patch["algorithm"] = o.algorithm;
    if (!o.strategy.empty()) patch["strategy"] = o.strategy;
    if (o.seed) patch["master_seed"] = *o.seed;
    if (o.trials) patch["trials"] = *o.trials;
    if (o.iters) patch["iters"] = *o.iters;
    if (o.mu_r) patch["mu_r_rule"] = *o.mu_r;
    if (o.graph_per_trial) patch["graph_per_trial"] = true;
    qglms::from_json(patch, c);
    c.validate();
    return c;
}

std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> out;
    for (const auto& f : qglms::csv::split_row(text)) {
        try {
            out.push_back(qglms::csv::parse_double(f));
        } catch (const std::exception& e) {
            throw qglms::ConfigError(std::string("--values: ") + e.what());
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quaternion graph LMS: adaptive recovery of band-limited quaternion graph signals"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qglms::version()));

    // gen-graph
    std::size_t gg_n = 50;
    double gg_p = 0.2;
    std::uint64_t gg_seed = 1;
    std::string gg_out;
    auto* gen = app.add_subcommand("gen-graph", "generate a connected Erdős–Rényi graph as an edge list");
    gen->add_option("--n", gg_n, "vertex count")->capture_default_str();
    gen->add_option("--p", gg_p, "edge probability")->capture_default_str();
    gen->add_option("--seed", gg_seed, "random seed")->capture_default_str();
    gen->add_option("--out", gg_out, "output edge-list CSV")->required();

    // run
    Overrides run_o;
    bool run_theory = false;
    bool run_force = false;
    bool run_per_trial = false;
    int run_workers = 0;
    std::string run_out = "out";
    auto* run = app.add_subcommand("run", "run the Monte-Carlo experiment");
    add_config_options(run, run_o);
    run->add_flag("--theory", run_theory, "add the theoretical learning curve");
    run->add_flag("--force", run_force, "run even if the sampling set is unrecoverable");
    run->add_flag("--per-trial", run_per_trial, "also write per-trial trajectories");
    run->add_option("--workers", run_workers, "OpenMP worker threads (0 = default)");
    run->add_option("--out-dir", run_out, "output directory")->capture_default_str();

    // theory
    Overrides th_o;
    std::string th_out;
    std::string th_report;
    bool th_force = false;
    auto* theory = app.add_subcommand("theory", "evaluate the mean-square learning curve and stability");
    add_config_options(theory, th_o);
    theory->add_option("--out", th_out, "output CSV (iter,mse_real,mse_imag,mse_total)")->required();
    theory->add_option("--report", th_report, "stability report JSON (default: stdout)");
    theory->add_flag("--force", th_force, "evaluate even if the sampling set is unrecoverable");

    // sweep
    Overrides sw_o;
    std::string sw_param;
    std::string sw_values;
    std::string sw_out;
    std::string sw_out_dir;
    bool sw_force = false;
    int sw_workers = 0;
    auto* sweep = app.add_subcommand("sweep", "repeat the experiment over one parameter");
    add_config_options(sweep, sw_o);
    sweep->add_option("--param", sw_param, "budget|mu_frac|sigma2")->required();
    sweep->add_option("--values", sw_values, "comma-separated values")->required();
    sweep->add_option("--out", sw_out, "comparison table CSV (default: stdout)");
    sweep->add_option("--out-dir", sw_out_dir, "also emit each run into <dir>/<param>_<value>");
    sweep->add_flag("--force", sw_force, "run even if a sampling set is unrecoverable");
    sweep->add_option("--workers", sw_workers, "OpenMP worker threads (0 = default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) {
            const auto g = qglms::gen_er_graph(gg_n, gg_p, gg_seed);
            qglms::write_edge_list(gg_out, g);
            std::cout << "wrote " << gg_out << " (" << gg_n << " vertices)\n";
        } else if (*run) {
            const auto config = resolve_config(run_o);
            qglms::RunOptions opts;
            opts.workers = run_workers;
            opts.force = run_force;
            opts.theory = run_theory;
            const auto result = qglms::run_experiment(config, opts);
            qglms::emit(result, run_out, {run_per_trial});
            for (const auto& r : result.algorithms)
                std::cout << qglms::to_string(r.algorithm) << ": steady-state NMSE " << r.steady_state_mean << " ("
                          << qglms::to_db(r.steady_state_mean) << " dB)\n";
            std::cout << "wrote " << run_out << '\n';
        } else if (*theory) {
            const auto config = resolve_config(th_o);
            const auto result = qglms::theory_for_config(config, th_force);
            {
                auto os = qglms::csv::open_out(th_out);
                qglms::write_theory_csv(os, result.curve);
            }
            nlohmann::json report = result.stability;
            report["mu"] = result.setup.mu;
            report["mu_bound"] = result.setup.mu_bound;
            report["steady_state"] = result.steady ? nlohmann::json(*result.steady) : nlohmann::json(nullptr);
            if (th_report.empty()) {
                std::cout << report.dump(2) << '\n';
            } else {
                auto os = qglms::csv::open_out(th_report);
                os << report.dump(2) << '\n';
            }
        } else if (*sweep) {
            const auto config = resolve_config(sw_o);
            qglms::RunOptions opts;
            opts.workers = sw_workers;
            opts.force = sw_force;
            const auto param = qglms::parse_sweep_param(sw_param);
            const auto values = parse_values(sw_values);
            const auto result = qglms::sweep(config, param, values, opts);
            if (!sw_out_dir.empty()) {
                for (std::size_t k = 0; k < result.runs.size(); ++k) {
                    const auto dir = std::filesystem::path(sw_out_dir) /
                                     (qglms::to_string(param) + "_" + qglms::csv::format_double(values[k]));
                    qglms::emit(result.runs[k], dir.string());
                }
            }
            if (sw_out.empty()) {
                qglms::write_sweep_csv(std::cout, result);
            } else {
                auto os = qglms::csv::open_out(sw_out);
                qglms::write_sweep_csv(os, result);
            }
        }
    } catch (const qglms::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qglms::UnrecoverableSampling& e) {
        std::cerr << "unrecoverable sampling: " << e.what() << '\n';
        return kExitUnrecoverable;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
