#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qglms/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace qglms;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.n_nodes = 24;
    c.edge_prob = 0.3;
    c.bandwidth = 4;
    c.budget = 6;
    c.trials = 12;
    c.iters = 80;
    c.master_seed = 9;
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name)
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + QGLMS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config JSON round trip and hash")
{
    ExperimentConfig c = small_config();
    c.mu_r = 0.3;
    c.strategy = Strategy::Random;
    c.algorithm = AlgorithmChoice::RLMS;
    nlohmann::json j = c;
    CHECK(j["mu_r_rule"] == 0.3);
    const auto back = j.get<ExperimentConfig>();
    CHECK(nlohmann::json(back) == j);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);

    ExperimentConfig d = c;
    d.iters += 1;
    CHECK(config_hash(d) != config_hash(c));

    nlohmann::json four = ExperimentConfig{};
    CHECK(four["mu_r_rule"] == "four_mu");
    CHECK_FALSE(four.get<ExperimentConfig>().mu_r.has_value());
}

TEST_CASE("config errors")
{
    ExperimentConfig c;
    CHECK_THROWS_AS(from_json(nlohmann::json{{"bogus", 1}}, c), ConfigError);
    CHECK_THROWS_AS(from_json(nlohmann::json{{"trials", "many"}}, c), ConfigError);
    CHECK_THROWS_AS(from_json(nlohmann::json{{"strategy", "best"}}, c), ConfigError);
    CHECK_THROWS_AS(from_json(nlohmann::json{{"mu_r_rule", "twice"}}, c), ConfigError);
    CHECK_THROWS_AS(from_json(nlohmann::json::array(), c), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);

    auto invalid = [](auto mutate) {
        ExperimentConfig x;
        mutate(x);
        return x;
    };
    CHECK_THROWS_AS(invalid([](auto& x) { x.bandwidth = 60; }).validate(), ConfigError);
    CHECK_THROWS_AS(invalid([](auto& x) { x.edge_prob = 0.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(invalid([](auto& x) { x.mu_frac = -0.1; }).validate(), ConfigError);
    CHECK_THROWS_AS(invalid([](auto& x) { x.trials = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(invalid([](auto& x) { x.noise_sigma2 = -1.0; }).validate(), ConfigError);
    CHECK_NOTHROW(ExperimentConfig{}.validate());

    // Missing fields keep their defaults.
    ExperimentConfig partial;
    from_json(nlohmann::json{{"trials", 5}}, partial);
    CHECK(partial.trials == 5);
    CHECK(partial.iters == 1000);
}

TEST_CASE("spectral coefficient synthesis")
{
    Rng rng(3);
    double sum = 0.0, sum2 = 0.0;
    const std::size_t draws = 25000;  // 10^5 components
    for (std::size_t t = 0; t < draws / 10; ++t) {
        const auto s = synthesize_spectral(10, 2.0, rng);
        for (std::size_t f = 0; f < 10; ++f)
            for (std::size_t c = 0; c < 4; ++c) {
                const double v = s.at(f)[c];
                CHECK(std::abs(v) <= 2.0);
                sum += v;
                sum2 += v * v;
            }
    }
    const double count = static_cast<double>(draws) * 4.0;
    CHECK(std::abs(sum2 / count - 4.0 / 3.0) <= 0.03 * 4.0 / 3.0);
    CHECK(std::abs(sum / count) <= 4.0 * std::sqrt(4.0 / 3.0 / count));

    CHECK(synthesize_spectral(5, 0.0, rng) == QSignal(5));

    const auto sg = build_spectral(gen_er_graph(20, 0.3, 4));
    const IndexSet F{0, 1, 2};
    const auto x = synthesize_signal(sg, F, 1.0, rng);
    const auto leak = apply_real_matrix(band_projector(sg, F), x) - x;
    CHECK(qnorm(leak) <= 1e-12 * qnorm(x));
}

TEST_CASE("prepare_setup")
{
    const auto c = small_config();
    const auto s = prepare_setup(c, 0, false);
    CHECK(s.plan.sample_set.size() == 6);
    CHECK(s.recoverability.recoverable);
    CHECK(s.mu == doctest::Approx(0.5 * s.mu_bound));
    CHECK(s.mu_r == doctest::Approx(4.0 * s.mu));
    CHECK(prepare_setup(c, 0, false).plan.sample_set == s.plan.sample_set);

    ExperimentConfig few = c;
    few.budget = 2;
    CHECK_THROWS_AS(prepare_setup(few, 0, false), UnrecoverableSampling);
    CHECK_NOTHROW(prepare_setup(few, 0, true));

    ExperimentConfig rnd = c;
    rnd.strategy = Strategy::Random;
    rnd.budget = 20;
    const auto r = prepare_setup(rnd, 0, false);
    CHECK(r.plan.seed.has_value());
    CHECK(r.plan.sample_set == prepare_setup(rnd, 0, false).plan.sample_set);
}

TEST_CASE("single trial reproduces run_filter")
{
    ExperimentConfig c = small_config();
    c.trials = 1;
    c.iters = 1;
    const auto res = run_experiment(c, {1, false, false});
    Rng signal = make_stream(c.master_seed, StreamPurpose::Signal, 0);
    const auto truth = synthesize_spectral(c.bandwidth, c.signal_range, signal);
    CHECK(res.spectral_truth.at(0) == truth);
    const auto model = make_observation_model(res.setup.ops, apply_real_matrix(res.setup.ops->U_F, truth), c.noise_sigma2);
    for (auto alg : {Algorithm::QGLMS, Algorithm::RLMS}) {
        Rng noise(derive_seed(c.master_seed, StreamPurpose::Noise, 0));
        const auto direct = run_filter(model, res.setup.mu, 1, noise, alg, res.setup.mu_r);
        CHECK(res.result(alg).trials.at(0).nmse == direct.nmse);
        CHECK(res.result(alg).nmse_mean == direct.nmse);
    }
}

TEST_CASE("aggregation")
{
    const auto c = small_config();
    const auto res = run_experiment(c, {1, false, false});
    for (const auto& r : res.algorithms) {
        REQUIRE(r.trials.size() == c.trials);
        REQUIRE(r.nmse_mean.size() == c.iters);
        for (std::size_t k : {0UL, 40UL, 79UL}) {
            double sum = 0.0;
            std::vector<double> col;
            for (const auto& t : r.trials) {
                sum += t.nmse[k];
                col.push_back(t.nmse[k]);
            }
            CHECK(std::abs(r.nmse_mean[k] - sum / 12.0) <= 1e-12);
            std::sort(col.begin(), col.end());
            CHECK(r.nmse_median[k] == doctest::Approx(0.5 * (col[5] + col[6])));
            CHECK(r.nmse_db_mean[k] == doctest::Approx(to_db(r.nmse_mean[k])));
        }
        const std::size_t w = steady_window(c.iters);
        CHECK(w == 8);
        double s0 = 0.0;
        for (std::size_t k = c.iters - w; k < c.iters; ++k) s0 += r.trials[0].nmse[k];
        CHECK(r.steady_per_trial[0] == doctest::Approx(s0 / static_cast<double>(w)));
        const double mean = std::accumulate(r.steady_per_trial.begin(), r.steady_per_trial.end(), 0.0) / 12.0;
        CHECK(r.steady_state_mean == doctest::Approx(mean));
    }
}

TEST_CASE("helpers")
{
    CHECK(steady_window(1000) == 100);
    CHECK(steady_window(1) == 1);
    CHECK(steady_window(15) == 2);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    const Trajectory t{{1.0, 0.5, 0.31, 0.3, 0.2}, {}, {}};
    CHECK(iterations_to_db(t, -10.0) == 3);  // 20 log10(0.31) < -10
    CHECK(iterations_to_db(t, -12.0) == 5);
    CHECK(iterations_to_db(t, -40.0) == 6);
    CHECK(iterations_to_db(t, 0.0) == 1);
}

TEST_CASE("serial and parallel trial loops agree exactly")
{
    ExperimentConfig c = small_config();
    c.graph_per_trial = true;
    const auto serial = run_experiment(c, {1, false, false});
    for (int workers : {2, 4}) {
        const auto par = run_experiment(c, {workers, false, false});
        for (std::size_t a = 0; a < serial.algorithms.size(); ++a) {
            CHECK(par.algorithms[a].nmse_mean == serial.algorithms[a].nmse_mean);
            CHECK(par.algorithms[a].steady_per_trial == serial.algorithms[a].steady_per_trial);
        }
    }
}

TEST_CASE("emitted files")
{
    TempDir a("qglms_emit_a"), b("qglms_emit_b");
    ExperimentConfig c = small_config();
    auto res = run_experiment(c, {1, false, true});
    REQUIRE(res.theory.has_value());
    emit(res, a.path.string(), {true});
    emit(run_experiment(c, {2, false, true}), b.path.string(), {true});

    for (const char* name : {"curve_qglms.csv", "curve_rlms.csv", "trials_qglms.csv", "trials_rlms.csv"}) {
        const auto text = slurp(a.path / name);
        CHECK(text == slurp(b.path / name));
        const auto lines = std::count(text.begin(), text.end(), '\n');
        if (std::string(name).rfind("curve", 0) == 0)
            CHECK(lines == 81);
        else
            CHECK(lines == 12 * 80 + 1);
    }
    CHECK(slurp(a.path / "curve_qglms.csv").rfind("iter,nmse_mean,nmse_median,nmse_db_mean,theory_mse_total\n", 0) == 0);
    CHECK(slurp(a.path / "curve_rlms.csv").rfind("iter,nmse_mean,nmse_median,nmse_db_mean\n", 0) == 0);

    const auto summary = nlohmann::json::parse(slurp(a.path / "summary.json"));
    CHECK(summary["config_hash"] == config_hash(c));
    CHECK(summary["sampling_plan"]["strategy"] == "maxdet");
    CHECK(summary["algorithms"].contains("qglms"));
    CHECK(summary["theory_steady_state"].contains("msd_total"));
}

TEST_CASE("sweeps")
{
    const auto c = small_config();
    const auto single = sweep(c, SweepParam::Budget, {6.0}, {1, false, false});
    const auto direct = run_experiment(c, {1, false, false});
    REQUIRE(single.rows.size() == 2);
    CHECK(single.rows[0].steady_state_mean == direct.result(Algorithm::QGLMS).steady_state_mean);
    CHECK(single.rows[1].steady_state_mean == direct.result(Algorithm::RLMS).steady_state_mean);

    ExperimentConfig longer = c;
    longer.iters = 400;
    longer.algorithm = AlgorithmChoice::QGLMS;
    const auto mus = sweep(longer, SweepParam::MuFrac, {0.1, 0.9}, {1, false, false});
    REQUIRE(mus.rows.size() == 2);
    // Larger steps converge sooner and settle higher.
    CHECK(mus.rows[1].median_iters_to_minus10db <= mus.rows[0].median_iters_to_minus10db);
    CHECK(mus.rows[1].steady_state_mean > mus.rows[0].steady_state_mean);

    std::ostringstream os;
    write_sweep_csv(os, mus);
    CHECK(os.str().rfind("param,value,algorithm,", 0) == 0);
    CHECK(os.str().find("mu_frac,0.1,qglms,") != std::string::npos);

    CHECK_THROWS_AS(sweep(c, SweepParam::Budget, {2.5}), ConfigError);
    CHECK_THROWS_AS(sweep(c, SweepParam::Budget, {}), ConfigError);
    CHECK(parse_sweep_param("sigma2") == SweepParam::Sigma2);
    CHECK_THROWS_AS(parse_sweep_param("p"), ConfigError);
}

TEST_CASE("theory for a configuration")
{
    const auto c = small_config();
    const auto t = theory_for_config(c, false);
    REQUIRE(t.curve.real.size() == c.iters + 1);
    CHECK(t.curve.real[0] == doctest::Approx(4.0 * 4.0 / 3.0));
    CHECK(t.curve.imag[0] == doctest::Approx(3.0 * 4.0 * 4.0 / 3.0));
    CHECK(t.stability.mean_stable);
    REQUIRE(t.steady.has_value());
    std::ostringstream os;
    write_theory_csv(os, t.curve);
    const auto text = os.str();
    CHECK(text.rfind("iter,mse_real,mse_imag,mse_total\n0,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(c.iters) + 2);
}

TEST_CASE("command-line exit codes")
{
    TempDir dir("qglms_cli_test");
    const auto cfg = (dir.path / "cfg.json").string();
    {
        std::ofstream os(cfg);
        os << nlohmann::json(small_config()).dump();
    }
    const auto out = (dir.path / "out").string();
    CHECK(run_cli("run --config " + cfg + " --trials 2 --iters 10 --out-dir " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "curve_qglms.csv"));
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("run --config " + cfg + " --algorithm lms --out-dir " + out) == 2);
    CHECK(run_cli("run --config /nonexistent.json --out-dir " + out) == 2);
    CHECK(run_cli("run --bogus-flag") == 2);

    const auto bad = (dir.path / "bad.json").string();
    {
        std::ofstream os(bad);
        os << R"({"n_nodes": 24, "bandwidth": 4, "budget": 2})";
    }
    CHECK(run_cli("run --config " + bad + " --trials 1 --iters 5 --out-dir " + out) == 3);
    CHECK(run_cli("run --config " + bad + " --trials 1 --iters 5 --force --out-dir " + out) == 0);
    CHECK(run_cli("theory --config " + bad + " --out " + (dir.path / "t.csv").string()) == 3);

    const auto edges = (dir.path / "edges.csv").string();
    CHECK(run_cli("gen-graph --n 12 --p 0.4 --seed 3 --out " + edges) == 0);
    CHECK(read_edge_list(edges).size() == 12);
    CHECK(run_cli("sweep --config " + cfg + " --param budget --values 6,8 --trials 2 --iters 10 --out " +
                  (dir.path / "sweep.csv").string()) == 0);
    CHECK(run_cli("sweep --config " + cfg + " --param width --values 1") == 2);
}
