#include "wavefreeze/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/fft.hpp"

namespace wavefreeze {

NoiseModel::NoiseModel(const Grid& grid, int m, double q0, double ell) : grid_(grid), m_(m), q0_(q0), ell_(ell) {
    if (m < 1) throw ConfigError("noise dimension must be >= 1");
    if (!(q0 >= 0.0)) throw ConfigError("noise.q0 must be non-negative");
    if (!(ell > 0.0)) throw ConfigError("noise.ell must be positive");
    const auto xi2 = wave_vector_sq(grid_);
    const double amp = q0_ * std::pow(2.0 * std::numbers::pi * ell_ * ell_, 0.5 * grid_.d);
    q_hat_.assign(xi2.size() * m_ * m_, 0.0);
    for (std::size_t p = 0; p < xi2.size(); ++p) {
        const double v = amp * std::exp(-0.5 * ell_ * ell_ * xi2[p]);
        for (int a = 0; a < m_; ++a) q_hat_[p * m_ * m_ + a * m_ + a] = v;
    }
    factorize();
}

void NoiseModel::factorize() {
    const std::size_t mm = static_cast<std::size_t>(m_) * m_;
    sqrt_q_hat_.assign(q_hat_.size(), 0.0);
    for (std::size_t p = 0; p < q_hat_.size() / mm; ++p) {
        Eigen::Map<const Eigen::MatrixXd> q(q_hat_.data() + p * mm, m_, m_);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Eigen::Map<Eigen::MatrixXd>(sqrt_q_hat_.data() + p * mm, m_, m_) =
            es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    }
}

NoiseModel NoiseModel::scaled(double s) const {
    NoiseModel out = *this;
    out.q0_ *= s;
    for (double& v : out.q_hat_) v *= s;
    out.factorize();
    return out;
}

Eigen::MatrixXd NoiseModel::kernel(const double* x) const {
    double r2 = 0.0;
    for (int a = 0; a < grid_.d; ++a) r2 += x[a] * x[a];
    return q0_ * std::exp(-r2 / (2.0 * ell_ * ell_)) * Eigen::MatrixXd::Identity(m_, m_);
}

double NoiseModel::q_L1() const { return q0_ * std::pow(2.0 * std::numbers::pi * ell_ * ell_, 0.5 * grid_.d); }

Eigen::Map<const Eigen::MatrixXd> NoiseModel::q_hat(std::size_t mode) const {
    return {q_hat_.data() + mode * m_ * m_, m_, m_};
}

Eigen::Map<const Eigen::MatrixXd> NoiseModel::sqrt_q_hat(std::size_t mode) const {
    return {sqrt_q_hat_.data() + mode * m_ * m_, m_, m_};
}

double NoiseModel::min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < grid_.points(); ++p) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(q_hat(p)), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

Field NoiseModel::apply_Q(const Field& v) const {
    if (v.components() != m_) throw ConfigError("apply_Q expects a field with m components");
    if (!(v.grid() == grid_)) throw ConfigError("apply_Q grid mismatch");
    std::vector<std::vector<std::complex<double>>> hat(m_);
    for (int a = 0; a < m_; ++a) hat[a] = fourier(v, a);
    Field out(grid_, m_);
    std::vector<std::vector<std::complex<double>>> res(m_, std::vector<std::complex<double>>(grid_.points()));
    for (std::size_t p = 0; p < grid_.points(); ++p) {
        const auto q = q_hat(p);
        for (int a = 0; a < m_; ++a) {
            std::complex<double> s = 0.0;
            for (int b = 0; b < m_; ++b) s += q(a, b) * hat[b][p];
            res[a][p] = s;
        }
    }
    for (int a = 0; a < m_; ++a) inverse_fourier(res[a], out, a);
    return out;
}

NoiseSampler::NoiseSampler(NoisePtr noise, std::uint64_t seed, std::uint64_t stream)
    : noise_(std::move(noise)), seed_(seed), stream_(stream) {}

Field NoiseSampler::sample_increment(std::uint64_t step, double dt) const {
    if (!(dt > 0.0)) throw ConfigError("noise increment requires dt > 0");
    const Grid& grid = noise_->grid();
    const int m = noise_->m();
    const std::size_t M = grid.points();
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<std::complex<double>>> hat(m, std::vector<std::complex<double>>(M));
    for (int a = 0; a < m; ++a) {
        for (std::size_t p = 0; p < M; ++p) hat[a][p] = normal(engine);
        fft_forward(grid.shape(), hat[a].data());
    }
    const double scale = std::sqrt(dt / grid.cell_volume());
    Field out(grid, m);
    if (m == 1) {
        for (std::size_t p = 0; p < M; ++p) hat[0][p] *= scale * noise_->sqrt_q_hat(p)(0, 0);
    } else {
        std::vector<std::complex<double>> tmp(m);
        for (std::size_t p = 0; p < M; ++p) {
            const auto s = noise_->sqrt_q_hat(p);
            for (int a = 0; a < m; ++a) {
                tmp[a] = 0.0;
                for (int b = 0; b < m; ++b) tmp[a] += s(a, b) * hat[b][p];
            }
            for (int a = 0; a < m; ++a) hat[a][p] = scale * tmp[a];
        }
    }
    for (int a = 0; a < m; ++a) inverse_fourier(hat[a], out, a);
    return out;
}

double hs_norm_multiplication_sq(const NoiseModel& noise, const Field& z, int n, double k) {
    const int m = noise.m();
    if (z.components() != n * m) throw ConfigError("HS norm expects a field with n*m components");
    const Grid& grid = z.grid();
    const std::size_t M = grid.points();
    const auto shape = grid.shape();
    std::vector<std::vector<std::complex<double>>> zh(n * m);
    for (int c = 0; c < n * m; ++c) zh[c] = fourier(z, c);
    const auto xi2 = wave_vector_sq(grid);
    // sum_j q_ab(j) h_ab(l - j) is a cyclic convolution over the mode lattice.
    std::vector<std::complex<double>> total(M, 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            std::vector<std::complex<double>> h(M, 0.0), q(M);
            bool any = false;
            for (std::size_t p = 0; p < M; ++p) {
                const double v = noise.q_hat(p)(a, b);
                q[p] = std::abs(v) < 1e-14 ? 0.0 : v;
                any = any || q[p] != 0.0;
            }
            if (!any) continue;
            for (int i = 0; i < n; ++i)
                for (std::size_t p = 0; p < M; ++p) h[p] += zh[i * m + a][p] * std::conj(zh[i * m + b][p]);
            fft_forward(shape, h.data());
            fft_forward(shape, q.data());
            for (std::size_t p = 0; p < M; ++p) h[p] *= q[p];
            fft_inverse(shape, h.data());
            for (std::size_t p = 0; p < M; ++p) total[p] += h[p] / static_cast<double>(M);
        }
    double acc = 0.0;
    for (std::size_t p = 0; p < M; ++p) acc += std::pow(1.0 + xi2[p], k) * total[p].real();
    return acc / (static_cast<double>(M) * static_cast<double>(M));
}

double hs_norm_multiplication(const NoiseModel& noise, const Field& z, int n, double k) {
    return std::sqrt(std::max(0.0, hs_norm_multiplication_sq(noise, z, n, k)));
}

}  // namespace wavefreeze
