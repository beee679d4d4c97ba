#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "wavefreeze/field.hpp"
#include "wavefreeze/linear_flow.hpp"
#include "wavefreeze/nonlinear.hpp"

namespace wavefreeze {

// Solution of A C + C A^T + G = 0 from the eigendecomposition A = R diag(lambda) R^{-1};
// the index skip (if >= 0) is excluded from the quadrature.
Eigen::MatrixXd lyapunov_spectral(const Eigen::VectorXcd& lambda, const ComplexMatrix& R,
                                  const ComplexMatrix& Rinv, const Eigen::MatrixXd& G, Eigen::Index skip = -1);
// Same equation for stable A by a Cayley transform with shift p and Smith doubling.
Eigen::MatrixXd lyapunov_smith(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, double p);
// ||A C + C A^T + G||_F / ||G||_F.
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C, const Eigen::MatrixXd& G);

// Stationary covariance of the first-order field: C_t = lim E[Y1_t Y1_t^*] / (P sigma^2)
// per transverse Fourier mode t (P transverse points), on the longitudinal
// nN-dimensional space.
struct CovarianceOperator {
    Grid grid;
    int n = 1;
    std::vector<Eigen::MatrixXd> modes;        // eigen quadrature route
    std::vector<Eigen::MatrixXd> modes_smith;  // Cayley-Smith route
    std::vector<Eigen::MatrixXd> forcing;      // G_t
    Field diagonal;                            // c(x), component i*n + j
    double trace = 0.0;                        // lim E||Y1||^2_{L2} / sigma^2
    double trace_smith = 0.0;
    double lyapunov_residual = 0.0;
    double route_difference = 0.0;            // max relative Frobenius difference
    double min_eigenvalue = 0.0;               // relative to the largest
    double psi_pairing = 0.0;                  // ||psi^T C_0|| / (||psi|| ||C_0||)

    // Eigenpairs of C_0 sorted by decreasing eigenvalue.
    void eigenpairs(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) const;
    Field mode_field(const Eigen::VectorXd& column) const;
};

CovarianceOperator stationary_covariance(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                                         bool smith_route = true);

// Pointwise contraction D^2 f(phi0(x))[c(x)].
Field hessian_contraction(const FreezeContext& ctx, const CovarianceOperator& cov);

struct MeanLimit {
    Field mean;        // lim E Y_2 / sigma^2
    Field source;      // P^perp [1/2 D^2 R_I(0) o C + rho_N]
    double fd_error = -1.0;          // analytic vs nested differences on the leading modes
    double truncation_error = -1.0;  // mass of the contraction outside the leading modes
};

// modes <= 0 skips the difference validation (d = 1 only).
MeanLimit mean_limit_Y2(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                        const CovarianceOperator& cov, int modes = 50);

struct SpeedCoefficient {
    double c2;
    double hessian_term;  // 1/2 <psi, D^2 f(phi0)[c]>
    double K_term;        // <K_C(phi0, 0), psi'>
    double nu_term;       // nu_tilde(phi0, 0) <phi0, psi''>
    double chi_l;
};

// c2 = -chi_l [1/2 <psi, D^2 f(phi0)[c]> - <K_C, psi'> + nu_tilde <phi0, psi''>].
SpeedCoefficient wave_speed_c2(const FreezeContext& ctx, const CovarianceOperator& cov);

struct LimitCoefficients {
    std::vector<double> h_inf;  // coefficients of sigma^0, sigma^1, sigma^2
    double c2 = 0.0;
};

using ScalarFunctional = std::function<double(const Field&)>;

// r = 3, d = 1: h_0 = phi(0), h_1 = 0, h_2 = D phi(0)[lim E Y_2 / sigma^2] + 1/2 D^2 phi(0) o C.
LimitCoefficients functional_h_infinity(const FreezeContext& ctx, const LinearOperator& op, const Projector& proj,
                                        const CovarianceOperator& cov, const ScalarFunctional& phi, int r = 3);

struct RateFit {
    double limit;
    double amplitude;
    double rate;
    double rms;
};

// Least squares fit of a + b e^{-c t} by variable projection in c.
RateFit convergence_rate_fit(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace wavefreeze
