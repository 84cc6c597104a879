#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mobsav/linop.hpp"

namespace mobsav {

/// Dense instantiation of the state space: Eigen vectors, Eigen matrices
/// as the block-solve operator.
struct DenseSpace {
    using Vector = Eigen::VectorXd;
    using Operator = Eigen::MatrixXd;

    static Vector axpy(const Vector& a, double c, const Vector& b) { return a + c * b; }
    static Vector scale(double c, const Vector& a) { return c * a; }
    static Vector zero_like(const Vector& a) { return Vector::Zero(a.size()); }
    static double norm(const Vector& a) { return a.norm(); }
    static Vector apply(const Operator& K, const Vector& a) { return K * a; }
};

/// Solves [[I, tau*K], [-AtA, I]] (u, mu) = (rhs_u, rhs_mu) by direct
/// factorization of the assembled 2n x 2n matrix.
std::pair<Eigen::VectorXd, Eigen::VectorXd>
dense_block_solve(const Eigen::MatrixXd& AtA, const Eigen::MatrixXd& K, double tau,
                  const Eigen::VectorXd& rhs_u, const Eigen::VectorXd& rhs_mu);

/// E(u) = 1/2 |Au - b|^2 on R^n.
class DenseQuadraticEnergy final : public QuadraticEnergy<DenseSpace> {
public:
    DenseQuadraticEnergy(Eigen::MatrixXd A, Eigen::VectorXd b);

    double value(const Vector& u) const override;
    Vector gradient(const Vector& u) const override;
    Vector apply_AtA(const Vector& u) const override;
    Vector affine_term() const override;
    std::pair<Vector, Vector> block_solve(double tau, const Operator& K,
                                          const Vector& rhs_u,
                                          const Vector& rhs_mu) const override;

    const Eigen::MatrixXd& A() const { return a_; }
    const Eigen::VectorXd& b() const { return b_; }
    const Eigen::MatrixXd& AtA() const { return ata_; }

private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd ata_;
    Eigen::VectorXd atb_;
};

/// J(mu) = 1/2 |L1 mu|^2 - 1/2 |L2 mu|^2 on R^n.
class DenseMobilitySplit final : public MobilitySplit<DenseSpace> {
public:
    DenseMobilitySplit(Eigen::MatrixXd L1, Eigen::MatrixXd L2);

    const Operator& l1tl1() const override { return l1tl1_; }
    Vector apply_l2tl2(const Vector& mu) const override { return l2tl2_ * mu; }
    double j1(const Vector& mu) const override { return 0.5 * (l1_ * mu).squaredNorm(); }
    double j2(const Vector& mu) const override { return 0.5 * (l2_ * mu).squaredNorm(); }
    double cross(const Vector& mu, const Vector& nu) const override {
        return (l2_ * mu).dot(l2_ * nu);
    }

    const Eigen::MatrixXd& L1() const { return l1_; }
    const Eigen::MatrixXd& L2() const { return l2_; }
    const Eigen::MatrixXd& l2tl2() const { return l2tl2_; }

private:
    Eigen::MatrixXd l1_;
    Eigen::MatrixXd l2_;
    Eigen::MatrixXd l1tl1_;
    Eigen::MatrixXd l2tl2_;
};

/// Eigenvalues of a symmetric matrix, ascending. Uses the characteristic
/// polynomial for n = 2 and cyclic Jacobi sweeps for larger (small) n.
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& m);

/// exp(M) by scaling-and-squaring with a Taylor core of order 16;
/// the squaring count is max(0, ceil(log2(|M|_1)) + 4).
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

/// The exemplar linear gradient-flow problem: u_t = -(L1'L1 - L2'L2)(A'A u - A'b).
struct ToyProblem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd L1;
    Eigen::MatrixXd L2;
    Eigen::VectorXd u0;

    /// A = diag(0.25, 2), b = 0, L1 = I, L2 = [[0.5, -0.4], [-0.4, 0.5]],
    /// u0 = (0.1, 2).
    static ToyProblem standard();

    /// Throws NumericalError unless L1'L1 - L2'L2 is positive definite.
    void validate() const;

    DenseQuadraticEnergy energy() const { return {A, b}; }
    DenseMobilitySplit mobility() const { return {L1, L2}; }
};

/// Exact solution u(t) of the toy flow via the matrix exponential applied
/// to the shifted variable u - u_*, where A'A u_* = A'b.
Eigen::VectorXd exact_flow(const ToyProblem& p, double t);

} // namespace mobsav
