#pragma once

// Mean and mean-square convergence theory of the QGLMS recursion, worked in
// the spectral coordinates s = U_F^T x.
//
// With M = U_F^T D U_F the spectral error obeys, per plane,
//   scalar:     s_0[n+1] = (I - 8 mu M) s_0[n] + 8 mu U_F^T D v_0[n]
//   imaginary:  s_c[n+1] = (I - 4 mu M) s_c[n] + 4 mu U_F^T D v_c[n]
// and for a weighting phi = vec(Phi) the second moments satisfy
//   E||s_0[n]||^2_phi = E||s_0[0]||^2_{Q^n phi} + 64 mu^2 r^T sum_{l<n} Q^l phi
// with Q = A (x) A, A = I - 8 mu M, r = vec(G), G = U_F^T D C_v0 D U_F, and
// the analogue with A' = I - 4 mu M, r' = vec(G') and gain 16 mu^2 for each
// imaginary plane.

#include "qglms/quat.hpp"
#include "qglms/spectral.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace qglms {

/// X (x) Y.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);
/// Column stacking and its inverse.
Eigen::VectorXd vec(const Eigen::MatrixXd& X);
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

/// Largest |eigenvalue| by power iteration (relative change below 1e-12 or
/// 1e5 iterations).
double spectral_radius(const Eigen::MatrixXd& A);

/// Largest |eigenvalue| of a symmetric matrix, i.e. its operator 2-norm.
double symmetric_norm2(const Eigen::MatrixXd& A);

struct TheoryModel {
    Eigen::MatrixXd M;
    double mu = 0.0;
    Eigen::MatrixXd A_real;  // I - 8 mu M
    Eigen::MatrixXd A_imag;  // I - 4 mu M
    Eigen::MatrixXd G;       // scalar-plane noise term
    Eigen::MatrixXd G_imag;  // per imaginary plane
    Eigen::MatrixXd Q;       // A_real (x) A_real
    Eigen::MatrixXd Q_imag;  // A_imag (x) A_imag

    Eigen::Index bandwidth() const { return M.rows(); }
};

/// Largest bandwidth for which the |F|^2 x |F|^2 Kronecker matrices are built.
inline constexpr Eigen::Index kMaxTheoryBandwidth = 64;

TheoryModel build_theory(const Eigen::MatrixXd& M, double mu, const Eigen::MatrixXd& G,
                         const Eigen::MatrixXd& G_imag);

/// G = U_F^T D C_v0 D U_F and G' = U_F^T D C_vc D U_F from vertex-domain
/// noise covariances (N x N).
TheoryModel build_theory(const Eigen::MatrixXd& U_F, const IndexSet& sample_set, double mu,
                         const Eigen::MatrixXd& C_v0, const Eigen::MatrixXd& C_vimag);

/// Noise with i.i.d. N(0, sigma2) components: G = G' = sigma2 M.
TheoryModel build_theory_iid(const Eigen::MatrixXd& U_F, const IndexSet& sample_set, double mu, double sigma2);

/// Expected spectral error E{s[n]} for n = 0..iters (|F| x 4 planes).
std::vector<QSignal> mean_trajectory(const TheoryModel& theory, const QSignal& s_err0, std::size_t iters);

/// Second moments E{s[0] s[0]^T} of the initial spectral error; the
/// imaginary entry is summed over the three planes.
struct InitialMoments {
    Eigen::MatrixXd real;
    Eigen::MatrixXd imag;
};

InitialMoments initial_moments(const QSignal& s_err0);
/// Average over a set of initial errors.
InitialMoments initial_moments(const std::vector<QSignal>& s_err0);
/// Initial error with i.i.d. components of variance `variance`.
InitialMoments isotropic_moments(Eigen::Index bandwidth, double variance);

struct MseCurve {
    std::vector<double> real;  // E||s_0[n]||^2, n = 0..iters
    std::vector<double> imag;  // E||IM s[n]||^2 over the three planes
    std::vector<double> total() const;
};

/// Runs the vectorized weighted-norm recursion with phi = vec(I).
/// Throws std::invalid_argument when the bandwidth exceeds kMaxTheoryBandwidth.
MseCurve mse_trajectory(const TheoryModel& theory, const InitialMoments& initial, std::size_t iters);

struct SteadyState {
    double msd_real = 0.0;
    double msd_imag_total = 0.0;
    double msd_total = 0.0;
};

/// Limit of mse_trajectory via the geometric series (I - Q)^{-1}. Throws
/// std::domain_error when rho(Q) or rho(Q_imag) >= 1 - 1e-10.
SteadyState steady_state_msd(const TheoryModel& theory);

struct StabilityReport {
    double norm_A_real = 0.0;
    double norm_A_imag = 0.0;
    double rho_Q = 0.0;
    double rho_Q_imag = 0.0;
    bool mean_stable = false;
    bool mse_stable = false;
};

StabilityReport stability_report(const Eigen::MatrixXd& M, double mu);

void to_json(nlohmann::json& j, const StabilityReport& r);
void to_json(nlohmann::json& j, const SteadyState& s);

}  // namespace qglms
