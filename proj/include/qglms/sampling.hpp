#pragma once

// Sampling-set selection and the diagnostics that depend on the chosen set:
// the coupling matrix M = U_F^T D U_F, the step-size bound and the
// recoverability check.

#include "qglms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace qglms {

enum class Strategy { MaxDet, Random };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct SamplingPlan {
    Strategy strategy = Strategy::MaxDet;
    IndexSet sample_set;
    /// Log pseudo-determinant of U_S^T U_S (MaxDet only).
    std::optional<double> score;
    /// Number of eigenvalues counted in the pseudo-determinant (MaxDet only).
    std::optional<std::size_t> rank;
    /// Seed used for the draw (Random only).
    std::optional<std::uint64_t> seed;
};

void to_json(nlohmann::json& j, const SamplingPlan& p);
void from_json(const nlohmann::json& j, SamplingPlan& p);

/// Rank and log pseudo-determinant (eigenvalues above 1e-12) of the Gram
/// matrix of the given rows of U_F.
struct PseudoDet {
    std::size_t rank = 0;
    double log_pdet = 0.0;

    /// Higher rank wins; equal rank compares log pseudo-determinants.
    friend bool operator<(const PseudoDet& a, const PseudoDet& b)
    {
        return a.rank != b.rank ? a.rank < b.rank : a.log_pdet < b.log_pdet;
    }
};
PseudoDet log_pseudo_det(const Eigen::MatrixXd& U_F, const IndexSet& rows);

/// Greedy Max-Det: grows S one vertex at a time, each time adding the vertex
/// that maximizes the pseudo-determinant of U_S^T U_S. Ties go to the smallest
/// vertex index.
SamplingPlan maxdet_select(const Eigen::MatrixXd& U_F, std::size_t budget);

/// Uniform draw without replacement, returned sorted.
SamplingPlan random_select(std::size_t n, std::size_t budget, std::uint64_t seed);

/// M = U_F^T D_S U_F.
Eigen::MatrixXd coupling_matrix(const Eigen::MatrixXd& U_F, const IndexSet& sample_set);

/// 1 / (4 lambda_max(M)). Throws std::domain_error when lambda_max <= 1e-12.
double mu_bound(const Eigen::MatrixXd& M);

struct Recoverability {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool recoverable = false;
};

/// Recoverable iff lambda_min(M) > 1e-8.
Recoverability recoverability_check(const Eigen::MatrixXd& M);

}  // namespace qglms
