#pragma once

#include <concepts>
#include <cstdint>
#include <utility>

namespace mobsav {

/// Capability set a state space must provide to the generic schemes.
///
/// A space bundles the vector type carrying states (u, mu) and the operator
/// type used for the implicit block of the 2x2 solves (a dense matrix for
/// small problems, a Fourier multiplier for periodic grids).
template <class S>
concept StateSpace = requires(const typename S::Vector& a,
                              const typename S::Vector& b,
                              const typename S::Operator& K, double c) {
    typename S::Vector;
    typename S::Operator;
    { S::axpy(a, c, b) } -> std::same_as<typename S::Vector>;
    { S::scale(c, a) } -> std::same_as<typename S::Vector>;
    { S::zero_like(a) } -> std::same_as<typename S::Vector>;
    { S::norm(a) } -> std::convertible_to<double>;
    { S::apply(K, a) } -> std::same_as<typename S::Vector>;
};

/// Quadratic energy E(u) = 1/2 |Au - b|^2 seen through its capabilities.
///
/// block_solve(tau, K, rhs_u, rhs_mu) solves the coupled system
///     [ I      tau*K ] [u ]   [rhs_u ]
///     [ -A*A   I     ] [mu] = [rhs_mu]
/// for a caller-supplied positive operator K, which is how every scheme in
/// this library advances (u, mu) implicitly.
template <StateSpace S>
class QuadraticEnergy {
public:
    using Vector = typename S::Vector;
    using Operator = typename S::Operator;

    virtual ~QuadraticEnergy() = default;

    virtual double value(const Vector& u) const = 0;
    /// grad E(u) = A*A u - A*b.
    virtual Vector gradient(const Vector& u) const = 0;
    virtual Vector apply_AtA(const Vector& u) const = 0;
    /// The constant term A*b.
    virtual Vector affine_term() const = 0;
    virtual std::pair<Vector, Vector> block_solve(double tau, const Operator& K,
                                                  const Vector& rhs_u,
                                                  const Vector& rhs_mu) const = 0;
};

/// Mobility functional J(mu) = J1(mu) - J2(mu) with J_i(mu) = 1/2 |L_i mu|^2.
///
/// L1 is the spatially homogeneous part treated implicitly; it is exposed as
/// the operator l1tl1() handed to QuadraticEnergy::block_solve. L2 carries
/// the inhomogeneous remainder and only ever acts explicitly.
template <StateSpace S>
class MobilitySplit {
public:
    using Vector = typename S::Vector;
    using Operator = typename S::Operator;

    virtual ~MobilitySplit() = default;

    /// Implicit-part operator L1*L1, in the space's operator representation.
    virtual const Operator& l1tl1() const = 0;
    virtual Vector apply_l1tl1(const Vector& mu) const { return S::apply(l1tl1(), mu); }
    virtual Vector apply_l2tl2(const Vector& mu) const = 0;
    virtual Vector apply_ltl(const Vector& mu) const {
        return S::axpy(apply_l1tl1(mu), -1.0, apply_l2tl2(mu));
    }
    virtual double j1(const Vector& mu) const = 0;
    virtual double j2(const Vector& mu) const = 0;
    /// cross(mu, nu) = <L2 mu, L2 nu>; cross(mu, mu) = 2 J2(mu).
    virtual double cross(const Vector& mu, const Vector& nu) const = 0;
};

/// Evolving state of any SAV scheme: the pair (u, mu) plus the auxiliary
/// scalar r shadowing sqrt(J2(mu)).
template <class Vector>
struct SavState {
    Vector u;
    Vector mu;
    double r = 0.0;
    std::int64_t step_index = 0;
    bool r_clamped = false; ///< set when the max(r, 0) clamp fired on the last update
};

/// Per-step observability record.
struct StepReport {
    double E_value = 0.0;
    double J_value = 0.0;       ///< J1(mu) - J2(mu)
    double J_tilde_value = 0.0; ///< J1(mu) - r^2, the Lyapunov quantity of the SAV schemes
    double r_value = 0.0;
    double r_exact = 0.0;       ///< sqrt(J2(mu)) recomputed on the new state
    bool fallback_used = false; ///< the J2 ~ 0 branch fired
};

/// Knobs shared by the SAV steppers.
struct SchemeOptions {
    bool clamp = true;   ///< enforce r >= 0 via max(r, 0)
    double c0 = 0.0;     ///< constant added under every sqrt(J2 + c0)
    /// Fallback threshold: the pure implicit L1-flow step is taken when
    /// sqrt(J2(mu) + c0) <= j2_floor_coeff * (1 + |mu|^2).
    double j2_floor_coeff = 1e-14;
    /// |1 - h_n(mu_2)| at or below this raises a singular-update error.
    double singular_update_tol = 1e-14;
};

template <StateSpace S>
using StepResult = std::pair<SavState<typename S::Vector>, StepReport>;

/// Consistent initial state: mu = grad E(u), r = sqrt(J2(mu) + c0).
template <StateSpace S>
SavState<typename S::Vector> make_initial_state(const typename S::Vector& u0,
                                                const QuadraticEnergy<S>& E,
                                                const MobilitySplit<S>& M,
                                                double c0 = 0.0);

} // namespace mobsav
