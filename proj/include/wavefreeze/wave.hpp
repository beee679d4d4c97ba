#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>

#include "wavefreeze/field.hpp"
#include "wavefreeze/model.hpp"

namespace wavefreeze {

// Travelling front data on the longitudinal grid. Phi0 = ref + w where ref is
// a fixed logistic connection between the pinning states and w is periodic.
struct WaveProfile {
    Grid line;
    double c0 = 0.0;
    Field phi0;                   // n components
    std::array<Field, 4> dphi0;   // first to fourth derivatives
    Field psi;                    // adjoint null vector, <psi, phi0'> = 1 on the line
    Field w;                      // periodic part of phi0
    Eigen::VectorXd ref_minus, ref_plus;
    double beta_tw = 0.0;
    double gap = 0.0;             // distance of the remaining spectrum to the axis
    double lambda0_residual = 0.0;
    double nu_minus = 0.0, nu_plus = 0.0;
    double nu_minus_linear = 0.0, nu_plus_linear = 0.0;
    double residual = 0.0;
    double far_field_error = 0.0;
    double adjoint_residual = 0.0;
    int newton_iterations = 0;

    // Profile data shifted by gamma: phi0(x - gamma), psi(x - gamma).
    WaveProfile translated(double gamma) const;
};

struct ProfileOptions {
    double tolerance = 1e-11;
    int max_iterations = 60;
    double phase_anchor = 0.0;
};

// Newton solve of Phi'' + c Phi' + f(Phi) = 0 with the first component pinned
// to its midpoint value at the anchor. init may be empty (logistic guess).
WaveProfile solve_profile(const ReactionModel& model, const Grid& grid, const std::optional<Field>& init = {},
                          const ProfileOptions& options = {});

// Null vector of the discrete adjoint, normalized so <psi, phi0'> = 1.
Field compute_adjoint(const ReactionModel& model, const Grid& grid, const WaveProfile& profile);

struct SpectralGap {
    double lambda0_residual;
    double beta_tw;
    double gap;
    int near_zero_count;
    Eigen::VectorXcd eigenvalues;
};

SpectralGap spectral_gap(const ReactionModel& model, const Grid& grid, const WaveProfile& profile,
                         double zero_tolerance = 1e-6);

// Full pipeline: profile, adjoint, gap and tail decay rates.
WaveProfile compute_wave(const ReactionModel& model, const Grid& grid, const std::optional<Field>& init = {},
                         const ProfileOptions& options = {});

// Dense spectral differentiation matrix on a periodic line grid.
Eigen::MatrixXd derivative_matrix(const Grid& line, int order);

// Longitudinal linearization D^2 + c0 D + Df(phi0(x)) as an nN x nN matrix.
Eigen::MatrixXd linearization_matrix(const ReactionModel& model, const WaveProfile& profile);

// Logistic connection and its derivatives (order 0..4) at x.
double logistic_derivative(double x, int order);

}  // namespace wavefreeze
