#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mobsav/errors.hpp"
#include "mobsav/linop.hpp"

namespace mobsav {

enum class GenericScheme {
    CvxSplit,
    MbSav1,
    MbSav1Plus,
    MbSav2,
    MbSav2Plus,
};

inline const char* to_string(GenericScheme s) {
    switch (s) {
    case GenericScheme::CvxSplit: return "cvx";
    case GenericScheme::MbSav1: return "mbsav1";
    case GenericScheme::MbSav1Plus: return "mbsav1plus";
    case GenericScheme::MbSav2: return "mbsav2";
    case GenericScheme::MbSav2Plus: return "mbsav2plus";
    }
    return "unknown";
}

namespace detail {

template <StateSpace S>
StepReport make_report(const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                       const typename S::Vector& u, const typename S::Vector& mu,
                       double r, bool fallback) {
    StepReport rep;
    rep.E_value = E.value(u);
    const double j1 = M.j1(mu);
    const double j2 = M.j2(mu);
    rep.J_value = j1 - j2;
    rep.J_tilde_value = j1 - r * r;
    rep.r_value = r;
    rep.r_exact = std::sqrt(std::max(j2, 0.0));
    rep.fallback_used = fallback;
    return rep;
}

inline void require_positive_dt(double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive, got " + std::to_string(dt));
}

inline void check_singular_update(double den, double tol, const char* quantity) {
    if (std::abs(den) <= tol) {
        std::ostringstream os;
        os << "singular r-update: " << quantity << " = " << den
           << " is within " << tol << " of zero";
        throw NumericalError(os.str());
    }
}

/// sqrt(J2(mu^n) + c0) <= coeff * (1 + |mu^n|^2) triggers the implicit
/// L1-flow fallback (the scheme degenerates when L2 mu^n vanishes).
template <StateSpace S>
bool below_j2_floor(double sj2, const typename S::Vector& mu, const SchemeOptions& opts) {
    const double mu_norm = S::norm(mu);
    return sj2 <= opts.j2_floor_coeff * (1.0 + mu_norm * mu_norm);
}

} // namespace detail

/// Convex-concave splitting step: L1*L1 implicit, L2*L2 explicit, no
/// auxiliary variable. The output r is sqrt(J2(mu^{n+1})) recomputed.
template <StateSpace S>
StepResult<S> cvx_split_step(const SavState<typename S::Vector>& state,
                             const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                             double dt) {
    detail::require_positive_dt(dt);
    using V = typename S::Vector;
    const V rhs_u = S::axpy(state.u, dt, M.apply_l2tl2(state.mu));
    const V neg_atb = S::scale(-1.0, E.affine_term());
    auto [u_new, mu_new] = E.block_solve(dt, M.l1tl1(), rhs_u, neg_atb);
    SavState<V> next{std::move(u_new), std::move(mu_new), 0.0, state.step_index + 1, false};
    next.r = std::sqrt(std::max(M.j2(next.mu), 0.0));
    StepReport rep = detail::make_report(E, M, next.u, next.mu, next.r, false);
    return {std::move(next), rep};
}

namespace detail {

/// Shared body of the first-order SAV steppers. `improved` selects the
/// r~^n = sqrt(J2(mu^n)) reset of the numerator.
template <StateSpace S>
StepResult<S> sav1_step_impl(const SavState<typename S::Vector>& state,
                             const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                             double dt, const SchemeOptions& opts, bool improved) {
    detail::require_positive_dt(dt);
    using V = typename S::Vector;
    const double j2n = M.j2(state.mu);
    const double sj2 = std::sqrt(std::max(j2n + opts.c0, 0.0));
    const V neg_atb = S::scale(-1.0, E.affine_term());

    if (below_j2_floor<S>(sj2, state.mu, opts)) {
        auto [u1, mu1] = E.block_solve(dt, M.l1tl1(), state.u, neg_atb);
        SavState<V> next{std::move(u1), std::move(mu1), 0.0, state.step_index + 1, false};
        StepReport rep = make_report(E, M, next.u, next.mu, next.r, true);
        return {std::move(next), rep};
    }

    auto [u1, mu1] = E.block_solve(dt, M.l1tl1(), state.u, neg_atb);
    const V l2l2_mu = M.apply_l2tl2(state.mu);
    auto [u2, mu2] = E.block_solve(dt, M.l1tl1(), S::scale(dt / sj2, l2l2_mu),
                                   S::zero_like(state.mu));

    const auto h = [&](const V& mu) { return M.cross(state.mu, mu) / (2.0 * sj2); };
    const double den = 1.0 - h(mu2);
    check_singular_update(den, opts.singular_update_tol, "1 - h_n(mu_2^{n+1})");

    const double num = improved ? h(mu1) : state.r - h(state.mu) + h(mu1);
    double r_new = num / den;
    bool clamped = false;
    if (opts.clamp && r_new < 0.0) {
        r_new = 0.0;
        clamped = true;
    }

    SavState<V> next{S::axpy(u1, r_new, u2), S::axpy(mu1, r_new, mu2), r_new,
                     state.step_index + 1, clamped};
    StepReport rep = make_report(E, M, next.u, next.mu, next.r, false);
    return {std::move(next), rep};
}

} // namespace detail

/// First-order mobility-SAV step: r is advanced by the increment of
/// h_n(mu) = <L2 mu^n, L2 mu> / (2 sqrt(J2(mu^n))).
template <StateSpace S>
StepResult<S> mb_sav1_step(const SavState<typename S::Vector>& state,
                           const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                           double dt, const SchemeOptions& opts = {}) {
    return detail::sav1_step_impl(state, E, M, dt, opts, /*improved=*/false);
}

/// Improved first-order step: the stored r is replaced by
/// r~^n = sqrt(J2(mu^n)) before the update, so the scheme cannot drift away
/// from the quantity it shadows.
template <StateSpace S>
StepResult<S> mb_sav1_plus_step(const SavState<typename S::Vector>& state,
                                const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                                double dt, const SchemeOptions& opts = {}) {
    return detail::sav1_step_impl(state, E, M, dt, opts, /*improved=*/true);
}

template <StateSpace S>
using PredictorFn = std::function<StepResult<S>(const SavState<typename S::Vector>&,
                                                const QuadraticEnergy<S>&,
                                                const MobilitySplit<S>&, double,
                                                const SchemeOptions&)>;

namespace detail {

template <StateSpace S>
StepResult<S> sav2_step_impl(const SavState<typename S::Vector>& state,
                             const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                             double dt, const SchemeOptions& opts,
                             const PredictorFn<S>& predictor, bool improved) {
    detail::require_positive_dt(dt);
    using V = typename S::Vector;

    // One first-order step supplies the order-1 approximation of mu at t_{n+1}.
    StepResult<S> pred = predictor ? predictor(state, E, M, dt, opts)
                                   : mb_sav1_step(state, E, M, dt, opts);
    const V mu_half = S::scale(0.5, S::axpy(state.mu, 1.0, pred.first.mu));

    const double j2h = M.j2(mu_half);
    const double sj2h = std::sqrt(std::max(j2h + opts.c0, 0.0));
    const V neg_atb = S::scale(-1.0, E.affine_term());
    const V rhs1_u = S::axpy(state.u, -0.5 * dt, M.apply_l1tl1(state.mu));

    if (below_j2_floor<S>(sj2h, mu_half, opts)) {
        auto [u1, mu1] = E.block_solve(0.5 * dt, M.l1tl1(), rhs1_u, neg_atb);
        SavState<V> next{std::move(u1), std::move(mu1), 0.0, state.step_index + 1, false};
        StepReport rep = make_report(E, M, next.u, next.mu, next.r, true);
        return {std::move(next), rep};
    }

    auto [u1, mu1] = E.block_solve(0.5 * dt, M.l1tl1(), rhs1_u, neg_atb);
    const V l2l2_half = M.apply_l2tl2(mu_half);
    auto [u2, mu2] = E.block_solve(0.5 * dt, M.l1tl1(), S::scale(dt / sj2h, l2l2_half),
                                   S::zero_like(state.mu));

    const auto h = [&](const V& mu) { return M.cross(mu_half, mu) / (2.0 * sj2h); };
    const double den = 1.0 - 0.5 * h(mu2);
    check_singular_update(den, opts.singular_update_tol, "1 - h_n(mu_2^{n+1})/2");

    const double lead = improved ? std::sqrt(std::max(M.j2(state.mu) + opts.c0, 0.0))
                                 : state.r;
    const double num = lead - h(state.mu) + h(mu1) + 0.5 * state.r * h(mu2);
    double r_new = num / den;
    bool clamped = false;
    if (opts.clamp && r_new < 0.0) {
        r_new = 0.0;
        clamped = true;
    }

    // Midpoint recombination; the coefficient averages the stored r^n with r^{n+1}.
    const double r_bar = 0.5 * (r_new + state.r);
    SavState<V> next{S::axpy(u1, r_bar, u2), S::axpy(mu1, r_bar, mu2), r_new,
                     state.step_index + 1, clamped};
    StepReport rep = make_report(E, M, next.u, next.mu, next.r, false);
    return {std::move(next), rep};
}

} // namespace detail

/// Second-order midpoint SAV step. The predictor (default: one Mb-SAV1 step)
/// supplies mu~^{n+1}; the block systems are solved at the half step.
template <StateSpace S>
StepResult<S> mb_sav2_step(const SavState<typename S::Vector>& state,
                           const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                           double dt, const SchemeOptions& opts = {},
                           const PredictorFn<S>& predictor = nullptr) {
    return detail::sav2_step_impl(state, E, M, dt, opts, predictor, /*improved=*/false);
}

/// Second-order step with the r~^n = sqrt(J2(mu^n)) reset in the r-update.
template <StateSpace S>
StepResult<S> mb_sav2_plus_step(const SavState<typename S::Vector>& state,
                                const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                                double dt, const SchemeOptions& opts = {},
                                const PredictorFn<S>& predictor = nullptr) {
    return detail::sav2_step_impl(state, E, M, dt, opts, predictor, /*improved=*/true);
}

template <StateSpace S>
StepResult<S> step_scheme(GenericScheme scheme, const SavState<typename S::Vector>& state,
                          const QuadraticEnergy<S>& E, const MobilitySplit<S>& M,
                          double dt, const SchemeOptions& opts = {}) {
    switch (scheme) {
    case GenericScheme::CvxSplit: return cvx_split_step(state, E, M, dt);
    case GenericScheme::MbSav1: return mb_sav1_step(state, E, M, dt, opts);
    case GenericScheme::MbSav1Plus: return mb_sav1_plus_step(state, E, M, dt, opts);
    case GenericScheme::MbSav2: return mb_sav2_step(state, E, M, dt, opts);
    case GenericScheme::MbSav2Plus: return mb_sav2_plus_step(state, E, M, dt, opts);
    }
    throw ConfigError("unknown scheme selector");
}

/// Monitor invoked after each step; returning false aborts the flow.
using FlowMonitor = std::function<bool(std::int64_t step, const StepReport&)>;

template <StateSpace S>
struct FlowResult {
    SavState<typename S::Vector> final_state;
    std::vector<StepReport> reports;
    bool aborted_by_monitor = false;
};

/// Iterate a scheme for n_steps, recording every StepReport.
template <StateSpace S>
FlowResult<S> run_flow(SavState<typename S::Vector> initial, const QuadraticEnergy<S>& E,
                       const MobilitySplit<S>& M, double dt, std::int64_t n_steps,
                       GenericScheme scheme, const SchemeOptions& opts = {},
                       const std::vector<FlowMonitor>& monitors = {}) {
    if (n_steps < 1) throw ConfigError("run_flow requires n_steps >= 1");
    FlowResult<S> out;
    out.reports.reserve(static_cast<std::size_t>(n_steps));
    SavState<typename S::Vector> state = std::move(initial);
    for (std::int64_t k = 0; k < n_steps; ++k) {
        StepResult<S> res = [&] {
            try {
                return step_scheme(scheme, state, E, M, dt, opts);
            } catch (const Error& e) {
                throw NumericalError("step " + std::to_string(state.step_index) + ": " + e.what());
            }
        }();
        state = std::move(res.first);
        out.reports.push_back(res.second);
        for (const auto& mon : monitors) {
            if (mon && !mon(state.step_index, res.second)) {
                out.aborted_by_monitor = true;
                out.final_state = std::move(state);
                return out;
            }
        }
    }
    out.final_state = std::move(state);
    return out;
}

template <StateSpace S>
SavState<typename S::Vector> make_initial_state(const typename S::Vector& u0,
                                                const QuadraticEnergy<S>& E,
                                                const MobilitySplit<S>& M, double c0) {
    SavState<typename S::Vector> st;
    st.u = u0;
    st.mu = E.gradient(u0);
    st.r = std::sqrt(std::max(M.j2(st.mu) + c0, 0.0));
    return st;
}

} // namespace mobsav
