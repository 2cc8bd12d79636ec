#include "qglms/harness.hpp"

#include "qglms/csv.hpp"
#include "qglms/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef QGLMS_VERSION
#define QGLMS_VERSION "unknown"
#endif

namespace qglms {

const char* version() { return QGLMS_VERSION; }

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (n_nodes < 2) fail("n_nodes must be >= 2");
    if (!(edge_prob > 0.0 && edge_prob <= 1.0)) fail("edge_prob must lie in (0, 1]");
    if (bandwidth < 1 || bandwidth > n_nodes) fail("bandwidth must lie in [1, n_nodes]");
    if (budget < 1 || budget > n_nodes) fail("budget must lie in [1, n_nodes]");
    if (!(noise_sigma2 >= 0.0) || !std::isfinite(noise_sigma2)) fail("noise_sigma2 must be finite and >= 0");
    if (!(signal_range >= 0.0) || !std::isfinite(signal_range)) fail("signal_range must be finite and >= 0");
    if (!(mu_frac > 0.0)) fail("mu_frac must be > 0");
    if (mu_r && !(*mu_r > 0.0)) fail("mu_r must be > 0");
    if (trials < 1) fail("trials must be >= 1");
    if (iters < 1) fail("iters must be >= 1");
}

std::vector<Algorithm> ExperimentConfig::algorithms() const
{
    switch (algorithm) {
    case AlgorithmChoice::QGLMS: return {Algorithm::QGLMS};
    case AlgorithmChoice::RLMS: return {Algorithm::RLMS};
    case AlgorithmChoice::Both: break;
    }
    return {Algorithm::QGLMS, Algorithm::RLMS};
}

static std::string to_string(AlgorithmChoice a)
{
    switch (a) {
    case AlgorithmChoice::QGLMS: return "qglms";
    case AlgorithmChoice::RLMS: return "rlms";
    case AlgorithmChoice::Both: break;
    }
    return "both";
}

static AlgorithmChoice parse_algorithm_choice(const std::string& s)
{
    if (s == "qglms") return AlgorithmChoice::QGLMS;
    if (s == "rlms") return AlgorithmChoice::RLMS;
    if (s == "both") return AlgorithmChoice::Both;
    throw ConfigError("unknown algorithm '" + s + "' (expected qglms|rlms|both)");
}

void to_json(nlohmann::json& j, const ExperimentConfig& c)
{
    j = nlohmann::json{{"n_nodes", c.n_nodes},
                       {"edge_prob", c.edge_prob},
                       {"bandwidth", c.bandwidth},
                       {"budget", c.budget},
                       {"noise_sigma2", c.noise_sigma2},
                       {"signal_range", c.signal_range},
                       {"mu_frac", c.mu_frac},
                       {"strategy", to_string(c.strategy)},
                       {"algorithm", to_string(c.algorithm)},
                       {"trials", c.trials},
                       {"iters", c.iters},
                       {"master_seed", c.master_seed},
                       {"graph_per_trial", c.graph_per_trial}};
    if (c.mu_r)
        j["mu_r_rule"] = *c.mu_r;
    else
        j["mu_r_rule"] = "four_mu";
}

void from_json(const nlohmann::json& j, ExperimentConfig& c)
{
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& key = it.key();
            const auto& v = it.value();
            if (key == "n_nodes") c.n_nodes = v.get<std::size_t>();
            else if (key == "edge_prob") c.edge_prob = v.get<double>();
            else if (key == "bandwidth") c.bandwidth = v.get<std::size_t>();
            else if (key == "budget") c.budget = v.get<std::size_t>();
            else if (key == "noise_sigma2") c.noise_sigma2 = v.get<double>();
            else if (key == "signal_range") c.signal_range = v.get<double>();
            else if (key == "mu_frac") c.mu_frac = v.get<double>();
            else if (key == "strategy") c.strategy = parse_strategy(v.get<std::string>());
            else if (key == "algorithm") c.algorithm = parse_algorithm_choice(v.get<std::string>());
            else if (key == "trials") c.trials = v.get<std::size_t>();
            else if (key == "iters") c.iters = v.get<std::size_t>();
            else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
            else if (key == "graph_per_trial") c.graph_per_trial = v.get<bool>();
            else if (key == "mu_r_rule") {
                if (v.is_string()) {
                    if (v.get<std::string>() != "four_mu") throw ConfigError("mu_r_rule must be \"four_mu\" or a number");
                    c.mu_r.reset();
                } else {
                    c.mu_r = v.get<double>();
                }
            } else
                throw ConfigError("unknown configuration field '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid configuration value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open configuration '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    ExperimentConfig c;
    from_json(j, c);
    c.validate();
    return c;
}

std::string config_hash(const ExperimentConfig& c)
{
    const std::string text = nlohmann::json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Setup and signals

TrialSetup prepare_setup(const ExperimentConfig& config, std::uint64_t graph_index, bool force)
{
    TrialSetup s;
    const auto graph_seed = derive_seed(config.master_seed, StreamPurpose::Graph, graph_index);
    s.sg = std::make_shared<const SpectralGraph>(build_spectral(gen_er_graph(config.n_nodes, config.edge_prob, graph_seed)));

    IndexSet freq(config.bandwidth);
    std::iota(freq.begin(), freq.end(), std::size_t{0});
    const Eigen::MatrixXd U_F = u_f(*s.sg, freq);

    if (config.strategy == Strategy::MaxDet)
        s.plan = maxdet_select(U_F, config.budget);
    else
        s.plan = random_select(config.n_nodes, config.budget,
                               derive_seed(config.master_seed, StreamPurpose::Sampling, graph_index));

    s.ops = make_operators(*s.sg, Support::create(freq, s.plan.sample_set, config.n_nodes));
    s.M = coupling_matrix(U_F, s.plan.sample_set);
    s.recoverability = recoverability_check(s.M);
    if (!s.recoverability.recoverable && !force)
        throw UnrecoverableSampling("sampling set cannot recover the band: lambda_min(U_F^T D U_F) = " +
                                    std::to_string(s.recoverability.lambda_min) + " (use --force to run anyway)");
    try {
        s.mu_bound = mu_bound(s.M);
    } catch (const std::domain_error& e) {
        throw UnrecoverableSampling(e.what());
    }
    s.mu = config.mu_frac * s.mu_bound;
    s.mu_r = config.mu_r.value_or(4.0 * s.mu);
    return s;
}

QSignal synthesize_spectral(std::size_t bandwidth, double range, Rng& rng)
{
    QSignal s(bandwidth);
    if (range == 0.0) return s;
    std::uniform_real_distribution<double> u(-range, range);
    for (std::size_t f = 0; f < bandwidth; ++f) {
        Quaternion q;
        q.w = u(rng);
        q.x = u(rng);
        q.y = u(rng);
        q.z = u(rng);
        s.set(f, q);
    }
    return s;
}

QSignal synthesize_signal(const SpectralGraph& sg, const IndexSet& freq_set, double range, Rng& rng)
{
    const QSignal coeffs = synthesize_spectral(freq_set.size(), range, rng);
    return apply_real_matrix(u_f(sg, freq_set), coeffs);
}

// ---------------------------------------------------------------------------
// Trials

namespace {

struct TrialOutput {
    QSignal spectral_truth;
    std::vector<Trajectory> per_algorithm;
};

TrialOutput run_trial(const ExperimentConfig& config, const TrialSetup& shared, std::size_t trial, bool force)
{
    std::optional<TrialSetup> own;
    if (config.graph_per_trial) own = prepare_setup(config, trial, force);
    const TrialSetup& setup = own ? *own : shared;

    Rng signal_rng = make_stream(config.master_seed, StreamPurpose::Signal, trial);
    TrialOutput out;
    out.spectral_truth = synthesize_spectral(config.bandwidth, config.signal_range, signal_rng);
    auto model = make_observation_model(setup.ops, apply_real_matrix(setup.ops->U_F, out.spectral_truth),
                                        config.noise_sigma2);

    // Algorithms see the same noise realization, so comparisons are paired.
    const auto noise_seed = derive_seed(config.master_seed, StreamPurpose::Noise, trial);
    for (auto alg : config.algorithms()) {
        Rng noise_rng(noise_seed);
        out.per_algorithm.push_back(run_filter(model, setup.mu, config.iters, noise_rng, alg, setup.mu_r));
    }
    return out;
}

// Reference loop.
std::vector<TrialOutput> run_trials_serial(const ExperimentConfig& config, const TrialSetup& shared, bool force)
{
    std::vector<TrialOutput> out(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t) out[t] = run_trial(config, shared, t, force);
    return out;
}

std::vector<TrialOutput> run_trials_omp(const ExperimentConfig& config, const TrialSetup& shared, bool force)
{
    std::vector<TrialOutput> out(config.trials);
    std::vector<std::exception_ptr> errors(config.trials);
    const auto n = static_cast<std::ptrdiff_t>(config.trials);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const auto k = static_cast<std::size_t>(t);
        try {
            out[k] = run_trial(config, shared, k, force);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

AlgorithmResult aggregate(Algorithm alg, std::vector<Trajectory> trials, std::size_t iters)
{
    AlgorithmResult r;
    r.algorithm = alg;
    r.trials = std::move(trials);
    const auto T = r.trials.size();
    r.nmse_mean.assign(iters, 0.0);
    r.nmse_median.assign(iters, 0.0);
    r.nmse_db_mean.assign(iters, 0.0);
    std::vector<double> column(T);
    for (std::size_t k = 0; k < iters; ++k) {
        double sum = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            column[t] = r.trials[t].nmse[k];
            sum += column[t];
        }
        r.nmse_mean[k] = sum / static_cast<double>(T);
        r.nmse_median[k] = median(column);
        r.nmse_db_mean[k] = to_db(r.nmse_mean[k]);
    }
    const auto w = steady_window(iters);
    r.steady_per_trial.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t k = iters - w; k < iters; ++k) s += r.trials[t].nmse[k];
        r.steady_per_trial[t] = s / static_cast<double>(w);
    }
    r.steady_state_mean =
        std::accumulate(r.steady_per_trial.begin(), r.steady_per_trial.end(), 0.0) / static_cast<double>(T);
    r.steady_state_median = median(r.steady_per_trial);
    return r;
}

}  // namespace

const AlgorithmResult& RunResult::result(Algorithm a) const
{
    for (const auto& r : algorithms)
        if (r.algorithm == a) return r;
    throw std::out_of_range("run has no results for algorithm " + to_string(a));
}

std::size_t steady_window(std::size_t iters) { return std::max<std::size_t>(1, (iters + 9) / 10); }

std::size_t iterations_to_db(const Trajectory& t, double db)
{
    for (std::size_t k = 0; k < t.nmse.size(); ++k)
        if (to_db(t.nmse[k]) <= db) return k + 1;
    return t.nmse.size() + 1;
}

double median(std::vector<double> values)
{
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const auto m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    if (options.workers > 0) kernels::set_workers(options.workers);

    RunResult result;
    result.config = config;
    result.setup = prepare_setup(config, 0, options.force);
    result.stability = stability_report(result.setup.M, result.setup.mu);

    auto outputs = options.workers == 1 ? run_trials_serial(config, result.setup, options.force)
                                        : run_trials_omp(config, result.setup, options.force);

    const auto algs = config.algorithms();
    result.spectral_truth.reserve(outputs.size());
    for (auto& o : outputs) result.spectral_truth.push_back(std::move(o.spectral_truth));
    for (std::size_t a = 0; a < algs.size(); ++a) {
        std::vector<Trajectory> per_trial;
        per_trial.reserve(outputs.size());
        for (auto& o : outputs) per_trial.push_back(std::move(o.per_algorithm[a]));
        result.algorithms.push_back(aggregate(algs[a], std::move(per_trial), config.iters));
    }

    if (options.theory && !config.graph_per_trial) {
        const auto theory = build_theory_iid(result.setup.ops->U_F, result.setup.plan.sample_set, result.setup.mu,
                                             config.noise_sigma2);
        // The initial error is -s_true, whose second moments equal those of s_true.
        result.theory = mse_trajectory(theory, initial_moments(result.spectral_truth), config.iters);
        try {
            result.theory_steady = steady_state_msd(theory);
        } catch (const std::domain_error&) {
            result.theory_steady.reset();
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// ---------------------------------------------------------------------------
// Output

void write_curve_csv(std::ostream& os, const AlgorithmResult& r, const std::optional<MseCurve>& theory)
{
    const bool with_theory = theory && r.algorithm == Algorithm::QGLMS;
    os << "iter,nmse_mean,nmse_median,nmse_db_mean";
    if (with_theory) os << ",theory_mse_total";
    os << '\n';
    for (std::size_t k = 0; k < r.nmse_mean.size(); ++k) {
        os << (k + 1) << ',' << csv::format_double(r.nmse_mean[k]) << ',' << csv::format_double(r.nmse_median[k])
           << ',' << csv::format_double(r.nmse_db_mean[k]);
        if (with_theory) os << ',' << csv::format_double(theory->real[k + 1] + theory->imag[k + 1]);
        os << '\n';
    }
}

nlohmann::json summary_json(const RunResult& result)
{
    nlohmann::json j;
    j["version"] = version();
    j["config"] = result.config;
    j["config_hash"] = config_hash(result.config);
    j["sampling_plan"] = result.setup.plan;
    j["recoverability"] = {{"lambda_min", result.setup.recoverability.lambda_min},
                           {"lambda_max", result.setup.recoverability.lambda_max},
                           {"recoverable", result.setup.recoverability.recoverable}};
    j["mu_bound"] = result.setup.mu_bound;
    j["mu"] = result.setup.mu;
    j["mu_r"] = result.setup.mu_r;
    j["stability"] = result.stability;
    nlohmann::json algs = nlohmann::json::object();
    for (const auto& r : result.algorithms) {
        algs[to_string(r.algorithm)] = {{"steady_state_nmse_mean", r.steady_state_mean},
                                        {"steady_state_nmse_median", r.steady_state_median},
                                        {"steady_state_nmse_db_mean", to_db(r.steady_state_mean)},
                                        {"final_nmse_mean", r.nmse_mean.back()}};
    }
    j["algorithms"] = algs;
    j["theory_steady_state"] = result.theory_steady ? nlohmann::json(*result.theory_steady) : nlohmann::json(nullptr);
    j["wall_seconds"] = result.wall_seconds;
    return j;
}

void emit(const RunResult& result, const std::string& out_dir, const EmitOptions& options)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());
    const fs::path dir(out_dir);
    for (const auto& r : result.algorithms) {
        const auto name = to_string(r.algorithm);
        {
            const auto path = (dir / ("curve_" + name + ".csv")).string();
            auto os = csv::open_out(path);
            write_curve_csv(os, r, result.theory);
            if (!os) throw std::runtime_error("failed writing '" + path + "'");
        }
        if (options.per_trial) {
            const auto path = (dir / ("trials_" + name + ".csv")).string();
            auto os = csv::open_out(path);
            write_trajectories_csv(os, r.trials);
            if (!os) throw std::runtime_error("failed writing '" + path + "'");
        }
    }
    const auto path = (dir / "summary.json").string();
    auto os = csv::open_out(path);
    os << summary_json(result).dump(2) << '\n';
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Sweeps

SweepParam parse_sweep_param(const std::string& s)
{
    if (s == "budget") return SweepParam::Budget;
    if (s == "mu_frac") return SweepParam::MuFrac;
    if (s == "sigma2") return SweepParam::Sigma2;
    throw ConfigError("unknown sweep parameter '" + s + "' (expected budget|mu_frac|sigma2)");
}

std::string to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::Budget: return "budget";
    case SweepParam::MuFrac: return "mu_frac";
    case SweepParam::Sigma2: break;
    }
    return "sigma2";
}

SweepResult sweep(const ExperimentConfig& config, SweepParam param, const std::vector<double>& values,
                  const RunOptions& options)
{
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    SweepResult out;
    out.param = param;
    for (double v : values) {
        ExperimentConfig c = config;
        switch (param) {
        case SweepParam::Budget:
            if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("budget values must be positive integers");
            c.budget = static_cast<std::size_t>(v);
            break;
        case SweepParam::MuFrac: c.mu_frac = v; break;
        case SweepParam::Sigma2: c.noise_sigma2 = v; break;
        }
        c.validate();
        out.runs.push_back(run_experiment(c, options));
        for (const auto& r : out.runs.back().algorithms) {
            std::vector<double> hits;
            hits.reserve(r.trials.size());
            for (const auto& t : r.trials) hits.push_back(static_cast<double>(iterations_to_db(t, -10.0)));
            out.rows.push_back({v, r.algorithm, r.steady_state_mean, r.steady_state_median, median(hits)});
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& s)
{
    os << "param,value,algorithm,steady_state_nmse_mean,steady_state_nmse_median,median_iters_to_minus10db\n";
    for (const auto& r : s.rows)
        os << to_string(s.param) << ',' << csv::format_double(r.value) << ',' << to_string(r.algorithm) << ','
           << csv::format_double(r.steady_state_mean) << ',' << csv::format_double(r.steady_state_median) << ','
           << csv::format_double(r.median_iters_to_minus10db) << '\n';
}

// ---------------------------------------------------------------------------
// Theory only

TheoryResult theory_for_config(const ExperimentConfig& config, bool force)
{
    config.validate();
    TheoryResult out;
    out.setup = prepare_setup(config, 0, force);
    out.stability = stability_report(out.setup.M, out.setup.mu);
    const auto theory =
        build_theory_iid(out.setup.ops->U_F, out.setup.plan.sample_set, out.setup.mu, config.noise_sigma2);
    const double variance = config.signal_range * config.signal_range / 3.0;
    out.curve = mse_trajectory(theory, isotropic_moments(theory.bandwidth(), variance), config.iters);
    try {
        out.steady = steady_state_msd(theory);
    } catch (const std::domain_error&) {
        out.steady.reset();
    }
    return out;
}

void write_theory_csv(std::ostream& os, const MseCurve& curve)
{
    os << "iter,mse_real,mse_imag,mse_total\n";
    for (std::size_t k = 0; k < curve.real.size(); ++k)
        os << k << ',' << csv::format_double(curve.real[k]) << ',' << csv::format_double(curve.imag[k]) << ','
           << csv::format_double(curve.real[k] + curve.imag[k]) << '\n';
}

}  // namespace qglms
