#include "qglms/sampling.hpp"

#include "qglms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qglms {

namespace {
constexpr double kPdetEigTol = 1e-12;
constexpr double kRecoverableTol = 1e-8;
constexpr double kMinLambdaMax = 1e-12;
}  // namespace

std::string to_string(Strategy s) { return s == Strategy::MaxDet ? "maxdet" : "random"; }

Strategy parse_strategy(const std::string& s)
{
    if (s == "maxdet") return Strategy::MaxDet;
    if (s == "random") return Strategy::Random;
    throw std::invalid_argument("unknown sampling strategy '" + s + "' (expected maxdet|random)");
}

void to_json(nlohmann::json& j, const SamplingPlan& p)
{
    j = nlohmann::json{{"strategy", to_string(p.strategy)}, {"sample_set", p.sample_set}};
    j["score"] = p.score ? nlohmann::json(*p.score) : nlohmann::json(nullptr);
    j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SamplingPlan& p)
{
    p.strategy = parse_strategy(j.at("strategy").get<std::string>());
    p.sample_set = j.at("sample_set").get<IndexSet>();
    p.score = j.contains("score") && !j["score"].is_null() ? std::optional<double>(j["score"].get<double>())
                                                          : std::nullopt;
    p.seed = j.contains("seed") && !j["seed"].is_null() ? std::optional<std::uint64_t>(j["seed"].get<std::uint64_t>())
                                                        : std::nullopt;
    p.rank.reset();
}

PseudoDet log_pseudo_det(const Eigen::MatrixXd& U_F, const IndexSet& rows)
{
    PseudoDet out;
    if (rows.empty()) return out;
    const Eigen::MatrixXd M = coupling_matrix(U_F, rows);
    const auto eig = eig_sym(M);
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
        if (eig.values(k) > kPdetEigTol) {
            ++out.rank;
            out.log_pdet += std::log(eig.values(k));
        }
    }
    return out;
}

SamplingPlan maxdet_select(const Eigen::MatrixXd& U_F, std::size_t budget)
{
    const auto n = static_cast<std::size_t>(U_F.rows());
    if (budget < 1 || budget > n)
        throw std::invalid_argument("sampling budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) +
                                    "]");
    IndexSet selected;
    std::vector<char> taken(n, 0);
    PseudoDet current;
    for (std::size_t step = 0; step < budget; ++step) {
        std::optional<std::size_t> best;
        PseudoDet best_score;
        for (std::size_t v = 0; v < n; ++v) {
            if (taken[v]) continue;
            IndexSet trial = selected;
            trial.insert(std::upper_bound(trial.begin(), trial.end(), v), v);
            const auto score = log_pseudo_det(U_F, trial);
            // Strict comparison keeps the smallest index on ties.
            if (!best || best_score < score) {
                best = v;
                best_score = score;
            }
        }
        taken[*best] = 1;
        selected.insert(std::upper_bound(selected.begin(), selected.end(), *best), *best);
        current = best_score;
    }
    SamplingPlan plan;
    plan.strategy = Strategy::MaxDet;
    plan.sample_set = std::move(selected);
    plan.score = current.log_pdet;
    plan.rank = current.rank;
    return plan;
}

SamplingPlan random_select(std::size_t n, std::size_t budget, std::uint64_t seed)
{
    if (budget < 1 || budget > n)
        throw std::invalid_argument("sampling budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) +
                                    "]");
    Rng rng(seed);
    IndexSet all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < budget; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(all[k], all[pick(rng)]);
    }
    IndexSet chosen(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(budget));
    std::sort(chosen.begin(), chosen.end());
    SamplingPlan plan;
    plan.strategy = Strategy::Random;
    plan.sample_set = std::move(chosen);
    plan.seed = seed;
    return plan;
}

Eigen::MatrixXd coupling_matrix(const Eigen::MatrixXd& U_F, const IndexSet& sample_set)
{
    const auto f = U_F.cols();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(f, f);
    for (auto v : sample_set) {
        if (v >= static_cast<std::size_t>(U_F.rows()))
            throw std::invalid_argument("sample index " + std::to_string(v) + " out of range");
        const Eigen::RowVectorXd row = U_F.row(static_cast<Eigen::Index>(v));
        M.noalias() += row.transpose() * row;
    }
    // Exact symmetry for the eigensolver.
    return 0.5 * (M + M.transpose());
}

double mu_bound(const Eigen::MatrixXd& M)
{
    const double lmax = eig_sym(M).values.maxCoeff();
    if (lmax <= kMinLambdaMax)
        throw std::domain_error("coupling matrix has lambda_max <= 1e-12: sampling set sees none of the band");
    return 1.0 / (4.0 * lmax);
}

Recoverability recoverability_check(const Eigen::MatrixXd& M)
{
    const auto vals = eig_sym(M).values;
    Recoverability r;
    r.lambda_min = vals.minCoeff();
    r.lambda_max = vals.maxCoeff();
    r.recoverable = r.lambda_min > kRecoverableTol;
    return r;
}

}  // namespace qglms
