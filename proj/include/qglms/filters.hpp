#pragma once

// Streaming observation model and the adaptive recursions:
//
//   y[n]   = D (x_true + v[n])
//   e[n]   = y[n] - D B x[n]
//   QGLMS  x[n+1] = x[n] + 4 mu B D (e_0[n] + e[n])
//   RLMS   x_c[n+1] = x_c[n] + mu_r B D (y_c[n] - B x_c[n]),  c = 0..3
//
// e_0 is the scalar plane of e promoted to a quaternion signal, so the QGLMS
// scalar plane moves with gain 8 mu and each imaginary plane with gain 4 mu.

#include "qglms/quat.hpp"
#include "qglms/rng.hpp"
#include "qglms/spectral.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qglms {

/// Fixed operators for one graph, band and sampling set.
struct Operators {
    Support support;
    Eigen::MatrixXd U_F;  // N x |F|
    Eigen::MatrixXd B;    // U_F U_F^T
    Eigen::MatrixXd D;    // Diag(1_S)
    std::vector<char> mask;

    std::size_t size() const { return mask.size(); }
};

std::shared_ptr<const Operators> make_operators(const SpectralGraph& sg, const Support& support);

/// Zeroes the rows of unsampled vertices (D applied as a selection).
void apply_mask(const std::vector<char>& mask, QSignal& s);

struct ObservationModel {
    std::shared_ptr<const Operators> ops;
    QSignal x_true;
    double noise_sigma2 = 0.0;
};

/// Checks B x_true = x_true (to 1e-9 relative) and noise_sigma2 >= 0.
ObservationModel make_observation_model(std::shared_ptr<const Operators> ops, QSignal x_true, double noise_sigma2);

/// One noisy partial observation. The noise has 4N i.i.d. N(0, sigma2)
/// components drawn vertex-major; entries off S are exactly zero.
QSignal observe(const ObservationModel& model, Rng& rng);

enum class StepSizeMode { Checked, Unchecked };

struct FilterState {
    QSignal x_hat;
    double mu = 0.0;
    std::size_t iter = 0;
};

/// Zero initial estimate. In checked mode requires 0 < mu <= bound.
FilterState make_filter_state(std::size_t n, double mu, double bound, StepSizeMode mode = StepSizeMode::Checked);

/// e = y - D B x_hat.
QSignal error_signal(const FilterState& state, const QSignal& y, const Operators& ops);

/// QGLMS step written with quaternion signals, as x + 4 mu B D (e_0 + e).
FilterState qglms_step(const FilterState& state, const QSignal& y, const Operators& ops);

/// Same recursion, plane by plane: gain 8 mu on the scalar plane and 4 mu on
/// the imaginary planes. Bit-identical to qglms_step.
FilterState qglms_step_componentwise(const FilterState& state, const QSignal& y, const Operators& ops);

/// Four independent real graph-LMS filters sharing gain mu_r.
struct RlmsState {
    QSignal x_hat;
    double mu_r = 0.0;
    std::size_t iter = 0;
};

RlmsState rlms_step(const RlmsState& state, const QSignal& y, const Operators& ops);

enum class Algorithm { QGLMS, RLMS };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

/// Per-iteration metrics, index k holding the values after update k+1.
struct Trajectory {
    std::vector<double> nmse;
    /// Squared error of the scalar plane, ||s_0[n] - s_true_0||^2.
    std::vector<double> err2_real;
    /// Squared error summed over the three imaginary planes.
    std::vector<double> err2_imag;
};

/// ||x - x_true|| / ||x_true||.
double nmse(const QSignal& x, const QSignal& x_true);
double to_db(double nmse_value);

/// Runs `iters` updates from x[0] = 0, drawing a fresh observation each time.
/// `mu` is the QGLMS step size; RLMS uses `mu_r` (4 mu when unset).
/// Throws std::invalid_argument when ||x_true|| < 1e-12, iters == 0 or mu <= 0.
Trajectory run_filter(const ObservationModel& model, double mu, std::size_t iters, Rng& rng, Algorithm algorithm,
                      std::optional<double> mu_r = std::nullopt);

void write_trajectory_csv(std::ostream& os, const Trajectory& t);
/// Aggregated form with a leading `trial` column.
void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trials);

}  // namespace qglms
