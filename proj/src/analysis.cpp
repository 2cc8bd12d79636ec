#include "qglms/analysis.hpp"

#include "qglms/rng.hpp"
#include "qglms/sampling.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace qglms {

namespace {
constexpr double kPowerTol = 1e-12;
constexpr int kPowerMaxIter = 100000;
constexpr double kStrictStabilityMargin = 1e-10;
constexpr double kReportTol = 1e-12;

void require_square(const Eigen::MatrixXd& A, Eigen::Index n, const char* what)
{
    if (A.rows() != n || A.cols() != n)
        throw std::invalid_argument(std::string(what) + " must be " + std::to_string(n) + " x " + std::to_string(n));
}
}  // namespace

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y)
{
    Eigen::MatrixXd K(X.rows() * Y.rows(), X.cols() * Y.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            K.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
    return K;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& X) { return Eigen::Map<const Eigen::VectorXd>(X.data(), X.size()); }

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols)
{
    if (rows * cols != v.size()) throw std::invalid_argument("unvec shape does not match vector length");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

double spectral_radius(const Eigen::MatrixXd& A)
{
    const auto n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("spectral_radius needs a square matrix");
    if (n == 0) return 0.0;
    // Fixed pseudo-random start so no eigenvector is missed by symmetry.
    Rng rng(0x5eed);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    v.normalize();

    double estimate = 0.0;
    for (int it = 0; it < kPowerMaxIter; ++it) {
        Eigen::VectorXd w = A * v;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        if (it > 0 && std::abs(next - estimate) <= kPowerTol * next) return next;
        estimate = next;
    }
    return estimate;
}

double symmetric_norm2(const Eigen::MatrixXd& A) { return eig_sym(A).values.cwiseAbs().maxCoeff(); }

TheoryModel build_theory(const Eigen::MatrixXd& M, double mu, const Eigen::MatrixXd& G, const Eigen::MatrixXd& G_imag)
{
    const auto f = M.rows();
    require_square(M, f, "coupling matrix");
    require_square(G, f, "scalar-plane noise matrix");
    require_square(G_imag, f, "imaginary-plane noise matrix");
    if (!(mu > 0.0)) throw std::invalid_argument("step size must be positive");
    if (f > kMaxTheoryBandwidth)
        throw std::invalid_argument("bandwidth " + std::to_string(f) + " exceeds theory limit " +
                                    std::to_string(kMaxTheoryBandwidth));

    TheoryModel t;
    t.M = M;
    t.mu = mu;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(f, f);
    t.A_real = I - 8.0 * mu * M;
    t.A_imag = I - 4.0 * mu * M;
    t.G = G;
    t.G_imag = G_imag;
    t.Q = kronecker(t.A_real, t.A_real);
    t.Q_imag = kronecker(t.A_imag, t.A_imag);
    return t;
}

TheoryModel build_theory(const Eigen::MatrixXd& U_F, const IndexSet& sample_set, double mu,
                         const Eigen::MatrixXd& C_v0, const Eigen::MatrixXd& C_vimag)
{
    const auto n = U_F.rows();
    require_square(C_v0, n, "scalar noise covariance");
    require_square(C_vimag, n, "imaginary noise covariance");
    const Eigen::MatrixXd D = vertex_mask(sample_set, static_cast<std::size_t>(n));
    const Eigen::MatrixXd UtD = U_F.transpose() * D;
    Eigen::MatrixXd G = UtD * C_v0 * UtD.transpose();
    Eigen::MatrixXd G_imag = UtD * C_vimag * UtD.transpose();
    G = 0.5 * (G + G.transpose());
    G_imag = 0.5 * (G_imag + G_imag.transpose());
    return build_theory(coupling_matrix(U_F, sample_set), mu, G, G_imag);
}

TheoryModel build_theory_iid(const Eigen::MatrixXd& U_F, const IndexSet& sample_set, double mu, double sigma2)
{
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be non-negative");
    const Eigen::MatrixXd M = coupling_matrix(U_F, sample_set);
    return build_theory(M, mu, sigma2 * M, sigma2 * M);
}

std::vector<QSignal> mean_trajectory(const TheoryModel& theory, const QSignal& s_err0, std::size_t iters)
{
    if (static_cast<Eigen::Index>(s_err0.size()) != theory.bandwidth())
        throw std::invalid_argument("initial spectral error length does not match bandwidth");
    std::vector<QSignal> out;
    out.reserve(iters + 1);
    out.push_back(s_err0);
    for (std::size_t k = 0; k < iters; ++k) {
        const PlaneMatrix& prev = out.back().planes();
        PlaneMatrix next(prev.rows(), 4);
        next.col(0) = theory.A_real * prev.col(0);
        for (int c = 1; c < 4; ++c) next.col(c) = theory.A_imag * prev.col(c);
        out.emplace_back(std::move(next));
    }
    return out;
}

InitialMoments initial_moments(const QSignal& s_err0)
{
    const auto& p = s_err0.planes();
    InitialMoments m;
    m.real = p.col(0) * p.col(0).transpose();
    m.imag = p.col(1) * p.col(1).transpose() + p.col(2) * p.col(2).transpose() + p.col(3) * p.col(3).transpose();
    return m;
}

InitialMoments initial_moments(const std::vector<QSignal>& s_err0)
{
    if (s_err0.empty()) throw std::invalid_argument("need at least one initial error");
    InitialMoments acc = initial_moments(s_err0.front());
    for (std::size_t k = 1; k < s_err0.size(); ++k) {
        const auto m = initial_moments(s_err0[k]);
        acc.real += m.real;
        acc.imag += m.imag;
    }
    const double inv = 1.0 / static_cast<double>(s_err0.size());
    acc.real *= inv;
    acc.imag *= inv;
    return acc;
}

InitialMoments isotropic_moments(Eigen::Index bandwidth, double variance)
{
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(bandwidth, bandwidth);
    return {variance * I, 3.0 * variance * I};
}

std::vector<double> MseCurve::total() const
{
    std::vector<double> t(real.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = real[k] + imag[k];
    return t;
}

MseCurve mse_trajectory(const TheoryModel& theory, const InitialMoments& initial, std::size_t iters)
{
    const auto f = theory.bandwidth();
    if (f > kMaxTheoryBandwidth) throw std::invalid_argument("bandwidth exceeds theory limit");
    require_square(initial.real, f, "initial scalar moment");
    require_square(initial.imag, f, "initial imaginary moment");

    const double mu2 = theory.mu * theory.mu;
    const Eigen::VectorXd phi0 = vec(Eigen::MatrixXd::Identity(f, f));
    const Eigen::VectorXd r = vec(theory.G);
    const Eigen::VectorXd r_imag = vec(theory.G_imag);
    const Eigen::VectorXd init_real = vec(initial.real);
    const Eigen::VectorXd init_imag = vec(initial.imag);

    MseCurve curve;
    curve.real.reserve(iters + 1);
    curve.imag.reserve(iters + 1);

    Eigen::VectorXd phi = phi0, phi_imag = phi0;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(f * f), acc_imag = Eigen::VectorXd::Zero(f * f);
    for (std::size_t n = 0; n <= iters; ++n) {
        // E||s[0]||^2_{Q^n phi} = Tr(Phi_n R_0) = vec(R_0)^T Q^n phi.
        curve.real.push_back(init_real.dot(phi) + 64.0 * mu2 * r.dot(acc));
        curve.imag.push_back(init_imag.dot(phi_imag) + 3.0 * 16.0 * mu2 * r_imag.dot(acc_imag));
        acc += phi;
        acc_imag += phi_imag;
        phi = theory.Q * phi;
        phi_imag = theory.Q_imag * phi_imag;
    }
    return curve;
}

SteadyState steady_state_msd(const TheoryModel& theory)
{
    const double rho = spectral_radius(theory.Q);
    const double rho_imag = spectral_radius(theory.Q_imag);
    if (rho >= 1.0 - kStrictStabilityMargin || rho_imag >= 1.0 - kStrictStabilityMargin)
        throw std::domain_error("recursion not strictly stable (rho(Q) = " + std::to_string(rho) +
                                ", rho(Q_imag) = " + std::to_string(rho_imag) + ")");
    const auto f = theory.bandwidth();
    const auto dim = f * f;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd phi = vec(Eigen::MatrixXd::Identity(f, f));
    const Eigen::VectorXd z = (I - theory.Q).partialPivLu().solve(phi);
    const Eigen::VectorXd z_imag = (I - theory.Q_imag).partialPivLu().solve(phi);
    const double mu2 = theory.mu * theory.mu;

    SteadyState s;
    s.msd_real = 64.0 * mu2 * vec(theory.G).dot(z);
    s.msd_imag_total = 3.0 * 16.0 * mu2 * vec(theory.G_imag).dot(z_imag);
    s.msd_total = s.msd_real + s.msd_imag_total;
    return s;
}

StabilityReport stability_report(const Eigen::MatrixXd& M, double mu)
{
    const auto f = M.rows();
    require_square(M, f, "coupling matrix");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(f, f);
    const Eigen::MatrixXd A_real = I - 8.0 * mu * M;
    const Eigen::MatrixXd A_imag = I - 4.0 * mu * M;

    StabilityReport r;
    r.norm_A_real = symmetric_norm2(A_real);
    r.norm_A_imag = symmetric_norm2(A_imag);
    if (f <= kMaxTheoryBandwidth) {
        r.rho_Q = spectral_radius(kronecker(A_real, A_real));
        r.rho_Q_imag = spectral_radius(kronecker(A_imag, A_imag));
    } else {
        // rho(A (x) A) = rho(A)^2.
        r.rho_Q = r.norm_A_real * r.norm_A_real;
        r.rho_Q_imag = r.norm_A_imag * r.norm_A_imag;
    }
    r.mean_stable = r.norm_A_real <= 1.0 + kReportTol && r.norm_A_imag <= 1.0 + kReportTol;
    r.mse_stable = r.rho_Q < 1.0 - kReportTol && r.rho_Q_imag < 1.0 - kReportTol;
    return r;
}

void to_json(nlohmann::json& j, const StabilityReport& r)
{
    j = nlohmann::json{{"norm_A_real", r.norm_A_real}, {"norm_A_imag", r.norm_A_imag},
                       {"rho_Q", r.rho_Q},             {"rho_Q_imag", r.rho_Q_imag},
                       {"mean_stable", r.mean_stable}, {"mse_stable", r.mse_stable}};
}

void to_json(nlohmann::json& j, const SteadyState& s)
{
    j = nlohmann::json{{"msd_real", s.msd_real}, {"msd_imag_total", s.msd_imag_total}, {"msd_total", s.msd_total}};
}

}  // namespace qglms
