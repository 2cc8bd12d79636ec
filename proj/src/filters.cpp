#include "qglms/filters.hpp"

#include "qglms/csv.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qglms {

std::shared_ptr<const Operators> make_operators(const SpectralGraph& sg, const Support& support)
{
    const auto n = sg.size();
    auto ops = std::make_shared<Operators>();
    ops->support = Support::create(support.freq_set, support.sample_set, n);
    ops->U_F = u_f(sg, support.freq_set);
    ops->B = ops->U_F * ops->U_F.transpose();
    ops->D = vertex_mask(support.sample_set, n);
    ops->mask.assign(n, 0);
    for (auto v : support.sample_set) ops->mask[v] = 1;
    return ops;
}

void apply_mask(const std::vector<char>& mask, QSignal& s)
{
    if (mask.size() != s.size()) throw std::invalid_argument("mask length does not match signal length");
    auto& p = s.planes();
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (!mask[v]) p.row(static_cast<Eigen::Index>(v)).setZero();
}

ObservationModel make_observation_model(std::shared_ptr<const Operators> ops, QSignal x_true, double noise_sigma2)
{
    if (!ops) throw std::invalid_argument("observation model needs operators");
    if (x_true.size() != ops->size()) throw std::invalid_argument("true signal length does not match graph size");
    if (!(noise_sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be non-negative");
    const QSignal bx = apply_real_matrix(ops->B, x_true);
    if (qnorm(bx - x_true) > 1e-9 * std::max(1.0, qnorm(x_true)))
        throw std::invalid_argument("true signal is not band-limited on the frequency set");
    return ObservationModel{std::move(ops), std::move(x_true), noise_sigma2};
}

QSignal observe(const ObservationModel& model, Rng& rng)
{
    const auto n = model.x_true.size();
    QSignal y = model.x_true;
    if (model.noise_sigma2 > 0.0) {
        std::normal_distribution<double> noise(0.0, std::sqrt(model.noise_sigma2));
        auto& p = y.planes();
        for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(n); ++v)
            for (int c = 0; c < 4; ++c) p(v, c) += noise(rng);
    }
    apply_mask(model.ops->mask, y);
    return y;
}

FilterState make_filter_state(std::size_t n, double mu, double bound, StepSizeMode mode)
{
    if (mode == StepSizeMode::Checked && !(mu > 0.0 && mu <= bound))
        throw std::invalid_argument("step size " + std::to_string(mu) + " outside (0, " + std::to_string(bound) + "]");
    return FilterState{QSignal(n), mu, 0};
}

static void require_dims(const QSignal& x, const QSignal& y, const Operators& ops)
{
    if (x.size() != ops.size() || y.size() != ops.size())
        throw std::invalid_argument("filter state, observation and operators disagree in size");
}

QSignal error_signal(const FilterState& state, const QSignal& y, const Operators& ops)
{
    require_dims(state.x_hat, y, ops);
    QSignal dbx = apply_real_matrix(ops.B, state.x_hat);
    apply_mask(ops.mask, dbx);
    return y - dbx;
}

FilterState qglms_step(const FilterState& state, const QSignal& y, const Operators& ops)
{
    QSignal e = error_signal(state, y, ops);
    QSignal e0 = real_part(e);
    QSignal drive = e0 + e;
    apply_mask(ops.mask, drive);
    const QSignal increment = apply_real_matrix(ops.B, drive);
    return FilterState{state.x_hat + (4.0 * state.mu) * increment, state.mu, state.iter + 1};
}

FilterState qglms_step_componentwise(const FilterState& state, const QSignal& y, const Operators& ops)
{
    require_dims(state.x_hat, y, ops);
    QSignal residual = y - apply_real_matrix(ops.B, state.x_hat);
    apply_mask(ops.mask, residual);
    const QSignal g = apply_real_matrix(ops.B, residual);
    FilterState next{state.x_hat, state.mu, state.iter + 1};
    next.x_hat.plane(0) += (8.0 * state.mu) * g.plane(0);
    for (int c = 1; c < 4; ++c) next.x_hat.plane(c) += (4.0 * state.mu) * g.plane(c);
    return next;
}

RlmsState rlms_step(const RlmsState& state, const QSignal& y, const Operators& ops)
{
    require_dims(state.x_hat, y, ops);
    QSignal residual = y - apply_real_matrix(ops.B, state.x_hat);
    apply_mask(ops.mask, residual);
    const QSignal g = apply_real_matrix(ops.B, residual);
    return RlmsState{state.x_hat + state.mu_r * g, state.mu_r, state.iter + 1};
}

std::string to_string(Algorithm a) { return a == Algorithm::QGLMS ? "qglms" : "rlms"; }

Algorithm parse_algorithm(const std::string& s)
{
    if (s == "qglms") return Algorithm::QGLMS;
    if (s == "rlms") return Algorithm::RLMS;
    throw std::invalid_argument("unknown algorithm '" + s + "' (expected qglms|rlms)");
}

double nmse(const QSignal& x, const QSignal& x_true) { return qnorm(x - x_true) / qnorm(x_true); }

double to_db(double nmse_value) { return 20.0 * std::log10(nmse_value); }

Trajectory run_filter(const ObservationModel& model, double mu, std::size_t iters, Rng& rng, Algorithm algorithm,
                      std::optional<double> mu_r)
{
    if (iters < 1) throw std::invalid_argument("run_filter needs at least one iteration");
    if (!(mu > 0.0)) throw std::invalid_argument("step size must be positive");
    const double true_norm = qnorm(model.x_true);
    if (true_norm < 1e-12) throw std::invalid_argument("true signal norm below 1e-12; NMSE undefined");

    const auto& ops = *model.ops;
    const auto n = ops.size();
    Trajectory t;
    t.nmse.reserve(iters);
    t.err2_real.reserve(iters);
    t.err2_imag.reserve(iters);

    // x - x_true stays in range(B), so its per-plane norms equal those of
    // the spectral error U_F^T (x - x_true).
    auto record = [&](const QSignal& x) {
        const PlaneMatrix err = x.planes() - model.x_true.planes();
        const double r = err.col(0).squaredNorm();
        const double im = err.col(1).squaredNorm() + err.col(2).squaredNorm() + err.col(3).squaredNorm();
        t.err2_real.push_back(r);
        t.err2_imag.push_back(im);
        t.nmse.push_back(std::sqrt(r + im) / true_norm);
    };

    if (algorithm == Algorithm::QGLMS) {
        FilterState state{QSignal(n), mu, 0};
        for (std::size_t k = 0; k < iters; ++k) {
            const QSignal y = observe(model, rng);
            state = qglms_step(state, y, ops);
            record(state.x_hat);
        }
    } else {
        RlmsState state{QSignal(n), mu_r.value_or(4.0 * mu), 0};
        for (std::size_t k = 0; k < iters; ++k) {
            const QSignal y = observe(model, rng);
            state = rlms_step(state, y, ops);
            record(state.x_hat);
        }
    }
    return t;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t)
{
    os << "iter,nmse,nmse_db\n";
    for (std::size_t k = 0; k < t.nmse.size(); ++k)
        os << (k + 1) << ',' << csv::format_double(t.nmse[k]) << ',' << csv::format_double(to_db(t.nmse[k])) << '\n';
}

void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trials)
{
    os << "trial,iter,nmse,nmse_db\n";
    for (std::size_t tr = 0; tr < trials.size(); ++tr) {
        const auto& t = trials[tr];
        for (std::size_t k = 0; k < t.nmse.size(); ++k)
            os << tr << ',' << (k + 1) << ',' << csv::format_double(t.nmse[k]) << ','
               << csv::format_double(to_db(t.nmse[k])) << '\n';
    }
}

}  // namespace qglms
