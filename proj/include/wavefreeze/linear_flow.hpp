#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "wavefreeze/field.hpp"
#include "wavefreeze/model.hpp"
#include "wavefreeze/wave.hpp"

namespace wavefreeze {

using ComplexMatrix = Eigen::MatrixXcd;

// L_tw acting along x, tensored with the transverse Laplacian. The dense
// longitudinal matrix carries a cached eigendecomposition.
class LinearOperator {
public:
    LinearOperator(const ReactionModel& model, const WaveProfile& profile, const Grid& grid);

    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    const Eigen::MatrixXd& matrix() const { return A_; }
    const Eigen::VectorXcd& eigenvalues() const { return lambda_; }
    const ComplexMatrix& right() const { return R_; }
    const ComplexMatrix& left() const { return Rinv_; }
    Eigen::Index neutral_index() const { return neutral_; }
    double condition_number() const { return cond_; }
    double reconstruction_error() const { return recon_; }
    double gap() const { return gap_; }
    double beta_tw() const { return 0.5 * gap_; }
    // min(beta_tw, lambda1 / 2).
    double beta() const;
    // |xi_perp|^2 for each transverse flat index.
    const std::vector<double>& transverse_eigenvalues() const { return lambda_perp_; }

    // Real longitudinal exponential R e^{Lambda t} R^{-1}; the neutral
    // eigenvalue is taken as exactly zero.
    Eigen::MatrixXd exp_matrix(double t) const;

    Field apply(const Field& v) const;
    Field apply_adjoint(const Field& w) const;
    Field apply_semigroup(double t, const Field& v) const;
    // Applies a longitudinal nN x nN matrix at every transverse point.
    Field apply_longitudinal(const Eigen::MatrixXd& M, const Field& v) const;
    // Multiplies transverse mode t by mult(|xi_perp|^2).
    Field apply_transverse(const Field& v, const std::function<double(double)>& mult) const;

private:
    Grid grid_;
    int n_;
    Eigen::MatrixXd A_;
    Eigen::VectorXcd lambda_;
    ComplexMatrix R_, Rinv_;
    Eigen::Index neutral_ = 0;
    double cond_ = 0.0, recon_ = 0.0, gap_ = 0.0;
    std::vector<double> lambda_perp_;
};

// Cached S(dt) for repeated stepping.
class Propagator {
public:
    Propagator(const LinearOperator& op, double dt);
    Field apply(const Field& v) const;
    double dt() const { return dt_; }

private:
    const LinearOperator* op_;
    double dt_;
    Eigen::MatrixXd S_;
};

// P = |T|^{-(d-1)} <., psi> phi0'.
class Projector {
public:
    Projector(const WaveProfile& profile, const Grid& grid);

    double coefficient(const Field& v) const;
    Field apply(const Field& v) const;
    Field complement(const Field& v) const;
    const Field& dphi0() const { return dphi0_; }
    const Field& psi() const { return psi_; }
    // I - phi0' psi^T dx on the longitudinal line.
    Eigen::MatrixXd complement_matrix() const;

private:
    Grid grid_;
    Field dphi0_, psi_;
    Field dphi0_line_, psi_line_;
};

struct DecayCertificate {
    double M_hat = 0.0;
    double beta_hat = 0.0;
    std::vector<double> times;
    std::vector<double> norms;
};

// Fits ||S(t) P^perp||_{H^k -> H^k} <= M e^{-beta t} on a log-spaced grid.
DecayCertificate decay_certificate(const LinearOperator& op, const Projector& proj, double k = 1.0);

// Operator norm of S(t) P^perp on H^k by power iteration.
double semigroup_norm(const LinearOperator& op, const Projector& proj, double t, double k);

// E(t, s) v for dv/dt = L_tw v + nu(t) Laplacian_perp v.
Field apply_evolution_family(const LinearOperator& op, const std::function<double(double)>& nu, double s, double t,
                             const Field& v);

// w with (L_tw + Laplacian_perp) w = -rhs and <w, psi> = 0, by eigen quadrature.
Field solve_on_range(const LinearOperator& op, const Projector& proj, const Field& rhs);
// Same problem by a bordered direct solve.
Field solve_on_range_direct(const LinearOperator& op, const Projector& proj, const Field& rhs);

// Dense matrix of the Fourier multiplier (1 + |xi|^2 + shift)^{power} on the line, n blocks.
Eigen::MatrixXd sobolev_weight_matrix(const Grid& line, int n, double power, double shift = 0.0);

// Transverse DFT of each longitudinal row: result is (n N) x (transverse points).
ComplexMatrix transverse_fourier(const Field& v);
Field inverse_transverse_fourier(const ComplexMatrix& coeffs, const Grid& grid, int components);

}  // namespace wavefreeze
