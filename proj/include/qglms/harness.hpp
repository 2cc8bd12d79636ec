#pragma once

// Monte-Carlo experiment orchestration: configuration, deterministic
// multi-trial runs, aggregation, parameter sweeps and file output.
//
// Trials are the unit of parallelism. Each trial draws its signal and noise
// from streams keyed by (master_seed, trial), writes into its own slot, and
// aggregation runs serially in trial order, so outputs do not depend on the
// worker count.

#include "qglms/analysis.hpp"
#include "qglms/filters.hpp"
#include "qglms/sampling.hpp"
#include "qglms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qglms {

const char* version();

/// Invalid configuration or command-line values (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sampling set cannot recover the band (CLI exit code 3).
class UnrecoverableSampling : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AlgorithmChoice { QGLMS, RLMS, Both };

struct ExperimentConfig {
    std::size_t n_nodes = 50;
    double edge_prob = 0.2;
    std::size_t bandwidth = 10;
    std::size_t budget = 10;
    double noise_sigma2 = 0.01;
    double signal_range = 2.0;
    double mu_frac = 0.5;
    /// Unset: RLMS gain is 4 mu.
    std::optional<double> mu_r;
    Strategy strategy = Strategy::MaxDet;
    AlgorithmChoice algorithm = AlgorithmChoice::Both;
    std::size_t trials = 200;
    std::size_t iters = 1000;
    std::uint64_t master_seed = 1;
    bool graph_per_trial = false;

    /// Throws ConfigError.
    void validate() const;
    std::vector<Algorithm> algorithms() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing fields keep their defaults; unknown fields are rejected.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);
/// FNV-1a of the canonical JSON form.
std::string config_hash(const ExperimentConfig& c);

/// Graph, operators and step sizes shared by the trials that use one graph.
struct TrialSetup {
    std::shared_ptr<const SpectralGraph> sg;
    std::shared_ptr<const Operators> ops;
    SamplingPlan plan;
    Eigen::MatrixXd M;
    Recoverability recoverability;
    double mu_bound = 0.0;
    double mu = 0.0;
    double mu_r = 0.0;
};

/// Builds graph `graph_index` of the experiment and selects its sampling set.
/// Throws UnrecoverableSampling unless `force` is set.
TrialSetup prepare_setup(const ExperimentConfig& config, std::uint64_t graph_index, bool force);

/// Spectral coefficients with i.i.d. Uniform(-range, range) components.
QSignal synthesize_spectral(std::size_t bandwidth, double range, Rng& rng);
/// x = U_F s for s drawn by synthesize_spectral.
QSignal synthesize_signal(const SpectralGraph& sg, const IndexSet& freq_set, double range, Rng& rng);

struct RunOptions {
    /// 0 keeps the OpenMP default.
    int workers = 0;
    bool force = false;
    bool theory = false;
};

struct AlgorithmResult {
    Algorithm algorithm = Algorithm::QGLMS;
    std::vector<Trajectory> trials;
    std::vector<double> nmse_mean;
    std::vector<double> nmse_median;
    std::vector<double> nmse_db_mean;
    /// Mean NMSE over the final 10% of iterations, per trial.
    std::vector<double> steady_per_trial;
    double steady_state_mean = 0.0;
    double steady_state_median = 0.0;
};

struct RunResult {
    ExperimentConfig config;
    TrialSetup setup;  // of graph 0
    StabilityReport stability;
    /// Spectral coefficients of each trial's true signal.
    std::vector<QSignal> spectral_truth;
    std::vector<AlgorithmResult> algorithms;
    std::optional<MseCurve> theory;
    std::optional<SteadyState> theory_steady;
    double wall_seconds = 0.0;

    const AlgorithmResult& result(Algorithm a) const;
};

std::size_t steady_window(std::size_t iters);
/// First iteration (1-based) whose NMSE is at or below `db`; iters + 1 if never.
std::size_t iterations_to_db(const Trajectory& t, double db);
double median(std::vector<double> values);

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct EmitOptions {
    bool per_trial = false;
};

/// Writes curve_<alg>.csv, optionally trials_<alg>.csv, and summary.json.
void emit(const RunResult& result, const std::string& out_dir, const EmitOptions& options = {});
nlohmann::json summary_json(const RunResult& result);
void write_curve_csv(std::ostream& os, const AlgorithmResult& r, const std::optional<MseCurve>& theory);

enum class SweepParam { Budget, MuFrac, Sigma2 };
SweepParam parse_sweep_param(const std::string& s);
std::string to_string(SweepParam p);

struct SweepRow {
    double value = 0.0;
    Algorithm algorithm = Algorithm::QGLMS;
    double steady_state_mean = 0.0;
    double steady_state_median = 0.0;
    double median_iters_to_minus10db = 0.0;
};

struct SweepResult {
    SweepParam param = SweepParam::Budget;
    std::vector<RunResult> runs;
    std::vector<SweepRow> rows;
};

SweepResult sweep(const ExperimentConfig& config, SweepParam param, const std::vector<double>& values,
                  const RunOptions& options = {});
void write_sweep_csv(std::ostream& os, const SweepResult& s);

/// Theory-only evaluation of a configuration: graph 0, its sampling set,
/// the learning curve from an isotropic initial error of variance range^2/3.
struct TheoryResult {
    TrialSetup setup;
    StabilityReport stability;
    MseCurve curve;
    std::optional<SteadyState> steady;
};

TheoryResult theory_for_config(const ExperimentConfig& config, bool force);
void write_theory_csv(std::ostream& os, const MseCurve& curve);

}  // namespace qglms
