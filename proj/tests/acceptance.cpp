// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,3,6] [--known-failure 7]
//
// Exit status is non-zero when a criterion fails that is not listed under
// --known-failure. Known failures still run and still print FAIL.

#include "qglms/analysis.hpp"
#include "qglms/filters.hpp"
#include "qglms/harness.hpp"
#include "qglms/quat.hpp"
#include "qglms/sampling.hpp"
#include "qglms/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

using namespace qglms;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

IndexSet iota_set(std::size_t n)
{
    IndexSet s(n);
    std::iota(s.begin(), s.end(), std::size_t{0});
    return s;
}

// Default experiment, shared by criteria 5, 7 and 8.
const RunResult& default_run()
{
    static const RunResult r = [] {
        ExperimentConfig c;
        return run_experiment(c, {0, false, true});
    }();
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1 ------------------------------------------------------------------------

Outcome algebra()
{
    const Quaternion i = Quaternion::i(), j = Quaternion::j(), k = Quaternion::k(), m1{-1, 0, 0, 0};
    bool units = i * i == m1 && j * j == m1 && k * k == m1 && (i * j) * k == m1 && i * j == k && j * i == -k &&
                 j * k == i && k * j == -i && k * i == j && i * k == -j;

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    auto draw = [&] { return Quaternion{u(rng), u(rng), u(rng), u(rng)}; };
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const auto a = draw(), b = draw(), c = draw();
        const double scale = abs(a) * abs(b);
        worst = std::max(worst, std::abs(abs(a * b) - scale) / scale);
        worst = std::max(worst, abs((a * b) * c - a * (b * c)) / (scale * abs(c)));
        worst = std::max(worst, abs(conj(a * b) - conj(b) * conj(a)) / scale);
        const auto qq = a * conj(a);
        worst = std::max(worst, abs(qq - Quaternion{norm2(a), 0, 0, 0}) / norm2(a));
    }
    return {units && worst <= 1e-12, "unit table " + std::string(units ? "ok" : "broken") + ", worst relative " +
                                         fmt("%.2e", worst) + " (tol 1e-12)"};
}

// 2 ------------------------------------------------------------------------

Outcome spectral_suite()
{
    std::mt19937_64 rng(2);
    double recon = 0.0, ortho = 0.0, proj = 0.0, round = 0.0;
    for (std::uint64_t g = 0; g < 20; ++g) {
        const std::size_t n = 10 + g * 50 / 19;
        const double p = std::max(0.2, 3.0 * std::log(static_cast<double>(n)) / static_cast<double>(n));
        const auto sg = build_spectral(gen_er_graph(n, p, 100 + g));
        const auto& U = sg.eigvecs;
        const Eigen::MatrixXd Lr = U * sg.eigvals.asDiagonal() * U.transpose();
        recon = std::max(recon, (Lr - sg.laplacian).norm() / sg.laplacian.norm());
        const auto N = static_cast<Eigen::Index>(n);
        ortho = std::max(ortho, (U.transpose() * U - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff());

        const auto F = iota_set(std::max<std::size_t>(1, n / 5));
        const auto S = random_select(n, n / 2, g).sample_set;
        const Eigen::MatrixXd B = band_projector(sg, F);
        const Eigen::MatrixXd D = vertex_mask(S, n);
        for (const Eigen::MatrixXd* P : {&B, &D}) {
            proj = std::max(proj, (*P * *P - *P).cwiseAbs().maxCoeff());
            proj = std::max(proj, (*P - P->transpose()).cwiseAbs().maxCoeff());
        }

        std::uniform_real_distribution<double> u(-1.0, 1.0);
        QSignal s(n);
        for (std::size_t v = 0; v < n; ++v) s.set(v, {u(rng), u(rng), u(rng), u(rng)});
        round = std::max(round, qnorm(iqgft(sg, qgft(sg, s)) - s) / qnorm(s));
    }
    const bool ok = recon <= 1e-9 && ortho <= 1e-10 && proj <= 1e-10 && round <= 1e-10;
    return {ok, "L reconstruction " + fmt("%.1e", recon) + ", orthonormality " + fmt("%.1e", ortho) +
                    ", projector " + fmt("%.1e", proj) + ", QGFT round trip " + fmt("%.1e", round)};
}

// 3 ------------------------------------------------------------------------

Outcome exact_recovery()
{
    ExperimentConfig c;
    c.noise_sigma2 = 0.0;
    const auto setup = prepare_setup(c, 0, false);
    Rng sig = make_stream(c.master_seed, StreamPurpose::Signal, 0);
    const auto x = apply_real_matrix(setup.ops->U_F, synthesize_spectral(c.bandwidth, c.signal_range, sig));
    const auto model = make_observation_model(setup.ops, x, 0.0);
    Rng noise(0);
    const auto t = run_filter(model, setup.mu, 5000, noise, Algorithm::QGLMS);
    Rng again(0);
    const bool same = run_filter(model, setup.mu, 5000, again, Algorithm::QGLMS).nmse == t.nmse;
    std::size_t hit = 0;
    for (std::size_t k = 0; k < t.nmse.size() && !hit; ++k)
        if (t.nmse[k] < 1e-8) hit = k + 1;
    return {hit > 0 && same, "NMSE " + fmt("%.2e", t.nmse.back()) + " after 5000 iterations, below 1e-8 at " +
                                 (hit ? std::to_string(hit) : std::string("never")) +
                                 (same ? ", deterministic" : ", NOT deterministic")};
}

// 4 ------------------------------------------------------------------------

Outcome step_boundary()
{
    int configs = 0, mean_ok = 0, mean_bad = 0, diverged = 0;
    double min_growth = INFINITY;
    for (std::uint64_t seed = 0; configs < 10; ++seed) {
        ExperimentConfig c;
        c.master_seed = 500 + seed;
        c.strategy = seed % 2 ? Strategy::Random : Strategy::MaxDet;
        c.budget = 15;
        TrialSetup s;
        try {
            s = prepare_setup(c, 0, false);
        } catch (const UnrecoverableSampling&) {
            continue;
        }
        ++configs;
        bool all = true;
        for (double f : {0.1, 0.5, 1.0}) all = all && stability_report(s.M, f * s.mu_bound).mean_stable;
        mean_ok += all;
        mean_bad += !stability_report(s.M, 3.0 * s.mu_bound).mean_stable;

        const auto theory = build_theory_iid(s.ops->U_F, s.plan.sample_set, 3.0 * s.mu_bound, c.noise_sigma2);
        Rng rng = make_stream(c.master_seed, StreamPurpose::Signal, 0);
        const auto s0 = synthesize_spectral(c.bandwidth, 1.0, rng);
        const auto traj = mean_trajectory(theory, s0, 100);
        const double growth = qnorm(traj.back()) / qnorm(s0);
        min_growth = std::min(min_growth, growth);
        diverged += growth > 1e3;
    }
    const bool ok = mean_ok == 10 && mean_bad == 10 && diverged == 10;
    return {ok, "stable at {0.1,0.5,1}*bound: " + std::to_string(mean_ok) + "/10, unstable at 3*bound: " +
                    std::to_string(mean_bad) + "/10, mean growth at n=100 >= " + fmt("%.2e", min_growth)};
}

// 5 ------------------------------------------------------------------------

Outcome theory_agreement()
{
    const auto& r = default_run();
    const auto& q = r.result(Algorithm::QGLMS);
    const auto& curve = *r.theory;
    const std::size_t iters = r.config.iters;
    std::vector<double> real(iters, 0.0), imag(iters, 0.0);
    for (const auto& t : q.trials)
        for (std::size_t k = 0; k < iters; ++k) {
            real[k] += t.err2_real[k];
            imag[k] += t.err2_imag[k];
        }
    const double nt = static_cast<double>(q.trials.size());
    double worst = 0.0;
    std::string detail;
    for (std::size_t n : {100, 500, 1000}) {
        const double er = rel(real[n - 1] / nt, curve.real[n]);
        const double ei = rel(imag[n - 1] / nt, curve.imag[n]);
        worst = std::max({worst, er, ei});
        detail += "n=" + std::to_string(n) + " " + fmt("%.3f", er) + "/" + fmt("%.3f", ei) + ", ";
    }
    const std::size_t w = steady_window(iters);
    double tail = 0.0;
    for (std::size_t k = iters - w; k < iters; ++k) tail += (real[k] + imag[k]) / nt;
    tail /= static_cast<double>(w);
    const double es = rel(tail, r.theory_steady->msd_total);
    worst = std::max(worst, es);
    detail += "steady " + fmt("%.4f", tail) + " vs " + fmt("%.4f", r.theory_steady->msd_total) + " (" +
              fmt("%.3f", es) + "); tol 0.10";
    return {worst <= 0.10, "relative errors real/imag " + detail};
}

// 6 ------------------------------------------------------------------------

Outcome closed_form()
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(10, 10);
    const auto ss = steady_state_msd(build_theory(I, 0.125, 0.01 * I, 0.01 * I));
    const double err = std::abs(ss.msd_total - 0.2);
    return {err <= 1e-9, "msd_total " + fmt("%.12f", ss.msd_total) + " (real " + fmt("%.6f", ss.msd_real) +
                             ", imaginary " + fmt("%.6f", ss.msd_imag_total) + "), |error| " + fmt("%.1e", err)};
}

// 7 ------------------------------------------------------------------------

// P(X >= k) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n)
{
    double p = 0.0;
    for (int x = wins; x <= n; ++x)
        p += std::exp(std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) - n * std::log(2.0));
    return std::min(1.0, p);
}

Outcome qglms_vs_rlms()
{
    const auto& r = default_run();
    const auto& q = r.result(Algorithm::QGLMS);
    const auto& b = r.result(Algorithm::RLMS);
    int wins = 0;
    for (std::size_t t = 0; t < q.steady_per_trial.size(); ++t) wins += q.steady_per_trial[t] < b.steady_per_trial[t];
    const int n = static_cast<int>(q.steady_per_trial.size());
    const double p = sign_test_p(wins, n);
    const bool ok = q.steady_state_mean < b.steady_state_mean && p < 0.01;
    return {ok, "steady NMSE QGLMS " + fmt("%.4f", q.steady_state_mean) + " vs RLMS " + fmt("%.4f", b.steady_state_mean) +
                    ", QGLMS lower in " + std::to_string(wins) + "/" + std::to_string(n) + " trials, sign-test p " +
                    fmt("%.3g", p)};
}

// 8 ------------------------------------------------------------------------

Outcome maxdet_vs_random()
{
    const auto& md = default_run().result(Algorithm::QGLMS);
    ExperimentConfig c;
    c.strategy = Strategy::Random;
    c.algorithm = AlgorithmChoice::QGLMS;
    // A random set may be ill-conditioned; it is still run, as the comparison requires.
    const auto rnd = run_experiment(c, {0, true, false});
    const auto& rq = rnd.result(Algorithm::QGLMS);
    return {md.steady_state_median <= rq.steady_state_median,
            "median steady NMSE Max-Det " + fmt("%.4f", md.steady_state_median) + " vs random " +
                fmt("%.4f", rq.steady_state_median) + " (random lambda_min " +
                fmt("%.2e", rnd.setup.recoverability.lambda_min) + ")"};
}

// 9 ------------------------------------------------------------------------

Outcome sample_size()
{
    ExperimentConfig c;
    c.algorithm = AlgorithmChoice::QGLMS;
    const auto s = sweep(c, SweepParam::Budget, {10, 20, 30});
    bool ok = true;
    std::string detail = "median iterations to -10 dB:";
    for (std::size_t k = 0; k < s.rows.size(); ++k) {
        detail += " |S|=" + fmt("%.0f", s.rows[k].value) + ": " + fmt("%.1f", s.rows[k].median_iters_to_minus10db);
        if (k > 0 && s.rows[k].median_iters_to_minus10db > s.rows[k - 1].median_iters_to_minus10db) ok = false;
    }
    return {ok, detail};
}

// 10 -----------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / "qglms_acceptance_determinism";
    fs::remove_all(root);
    std::map<int, fs::path> dirs;
    for (int workers : {1, 8}) {
        dirs[workers] = root / ("w" + std::to_string(workers));
        const std::string cmd = std::string("\"") + QGLMS_CLI_PATH + "\" run --theory --per-trial --workers " +
                                std::to_string(workers) + " --out-dir \"" + dirs[workers].string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "qglms run failed with " + std::to_string(workers) + " workers"};
    }
    std::size_t files = 0, bytes = 0;
    bool same = true;
    for (const auto& e : fs::directory_iterator(dirs[1])) {
        if (e.path().extension() != ".csv") continue;
        const auto a = slurp(e.path());
        const auto b = slurp(dirs[8] / e.path().filename());
        same = same && a == b;
        ++files;
        bytes += a.size();
    }
    fs::remove_all(root);
    return {same && files == 4, std::to_string(files) + " CSV files, " + std::to_string(bytes) + " bytes, " +
                                    (same ? "byte-identical" : "DIFFERENT") + " between 1 and 8 workers"};
}

std::set<int> parse_ids(const std::string& text)
{
    std::set<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"QGLMS acceptance suite"};
    std::string only, known;
    app.add_option("--only", only, "comma-separated criteria to run");
    app.add_option("--known-failure", known, "criteria whose failure does not fail the run");
    CLI11_PARSE(app, argc, argv);
    const auto selected = parse_ids(only);
    const auto expected = parse_ids(known);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"algebra suite", algebra},
        {"spectral suite", spectral_suite},
        {"exact recovery", exact_recovery},
        {"step-size boundary", step_boundary},
        {"theory vs Monte-Carlo", theory_agreement},
        {"closed-form oracle", closed_form},
        {"QGLMS vs RLMS", qglms_vs_rlms},
        {"Max-Det vs random", maxdet_vs_random},
        {"sample-size effect", sample_size},
        {"determinism", determinism},
    };

    int unexpected = 0, failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << criteria[k].first << ": " << o.detail
                  << " (" << fmt("%.1f", secs) << " s)";
        if (!o.pass && expected.count(id)) std::cout << " [known failure]";
        std::cout << std::endl;
        failed += !o.pass;
        unexpected += !o.pass && !expected.count(id);
    }
    std::cout << failed << " failed, " << unexpected << " unexpected" << std::endl;
    return unexpected == 0 ? 0 : 1;
}
