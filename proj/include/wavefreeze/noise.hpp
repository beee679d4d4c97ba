#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "wavefreeze/field.hpp"

namespace wavefreeze {

// Translation invariant Q-Wiener noise with the diagonal Gaussian kernel
// q(x) = q0 exp(-|x|^2 / (2 ell^2)) I_m. Spectra are the continuum transforms
// sampled on the grid modes.
class NoiseModel {
public:
    NoiseModel(const Grid& grid, int m, double q0, double ell);

    const Grid& grid() const { return grid_; }
    int m() const { return m_; }
    double q0() const { return q0_; }
    double ell() const { return ell_; }

    Eigen::MatrixXd kernel(const double* x) const;
    double q_L1() const;
    // m x m spectrum and its square root at a flat mode index.
    Eigen::Map<const Eigen::MatrixXd> q_hat(std::size_t mode) const;
    Eigen::Map<const Eigen::MatrixXd> sqrt_q_hat(std::size_t mode) const;
    double min_eigenvalue() const;

    // Convolution with q realized by spectral multiplication.
    Field apply_Q(const Field& v) const;

    // Same model with every spectrum multiplied by s.
    NoiseModel scaled(double s) const;

private:
    void factorize();

    Grid grid_;
    int m_;
    double q0_, ell_;
    std::vector<double> q_hat_, sqrt_q_hat_;
};

using NoisePtr = std::shared_ptr<const NoiseModel>;

// Seeded increment generator; (seed, stream, step) determines the increment.
class NoiseSampler {
public:
    NoiseSampler(NoisePtr noise, std::uint64_t seed, std::uint64_t stream);

    Field sample_increment(std::uint64_t step, double dt) const;
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    NoisePtr noise_;
    std::uint64_t seed_, stream_;
};

// Squared norm of the multiplication operator xi -> z xi in HS(L2_Q; H^k).
// z has n*m components, entry (i, a) stored at component i*m + a.
double hs_norm_multiplication_sq(const NoiseModel& noise, const Field& z, int n, double k);
double hs_norm_multiplication(const NoiseModel& noise, const Field& z, int n, double k);

}  // namespace wavefreeze
