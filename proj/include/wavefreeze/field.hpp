#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace wavefreeze {

// Truncated cylinder [-L, L) x (T_perp torus)^(d-1), periodic in every axis.
struct Grid {
    int d = 1;
    double L = 32.0;
    int N = 128;
    double T_perp = 6.283185307179586;
    int N_perp = 1;

    static Grid make(int d, double L, int N, double T_perp = 6.283185307179586, int N_perp = 1);

    double dx() const { return 2.0 * L / N; }
    double dx_perp() const { return T_perp / N_perp; }
    int transverse_points() const;
    std::size_t points() const { return static_cast<std::size_t>(N) * transverse_points(); }
    double cell_volume() const;
    double torus_volume() const;
    // First nonzero transverse Laplacian eigenvalue; +inf when d = 1.
    double lambda1() const;
    double x(int i) const { return -L + i * dx(); }
    std::vector<int> shape() const;
    Grid longitudinal() const { return Grid{1, L, N, T_perp, 1}; }

    bool operator==(const Grid&) const = default;
};

// Angular wavenumber of FFT index i on a periodic axis with n points and length len.
double wavenumber(int i, int n, double len);

// Real field on a grid; values are component-outermost, then the
// longitudinal index, then transverse indices (row-major).
class Field {
public:
    Field() = default;
    Field(const Grid& grid, int components);

    const Grid& grid() const { return grid_; }
    int components() const { return components_; }
    std::size_t points() const { return grid_.points(); }
    std::size_t size() const { return values_.size(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    double* component(int c) { return values_.data() + c * points(); }
    const double* component(int c) const { return values_.data() + c * points(); }
    double& operator()(int c, std::size_t p) { return values_[c * points() + p]; }
    double operator()(int c, std::size_t p) const { return values_[c * points() + p]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    Eigen::Map<Eigen::VectorXd> vec() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
    Eigen::Map<const Eigen::VectorXd> vec() const {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
    Field& axpy(double a, const Field& x);
    void set_zero();
    bool finite() const;
    double max_abs() const;

    // Copies a field given on the longitudinal grid onto every transverse point.
    static Field broadcast(const Field& line, const Grid& target);

private:
    Grid grid_;
    int components_ = 0;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// Fourier multiplier m(xi) applied componentwise; xi is the wave vector
// (longitudinal first, three entries, zero beyond d) and nyquist flags the
// Nyquist index per axis. The multiplier must preserve real fields.
Field apply_multiplier(const Field& field,
                       const std::function<std::complex<double>(const double* xi, const bool* nyquist)>& m);

Field spectral_derivative(const Field& field, int axis, int order);
double sobolev_norm(const Field& field, double k);
double sobolev_norm_sq(const Field& field, double k);
// Squared norms for several k from one transform.
std::vector<double> sobolev_norms_sq(const Field& field, const std::vector<double>& ks);
// T_gamma v(x) = v(x - gamma) along the longitudinal axis.
Field translate(const Field& field, double gamma);
double inner_product(const Field& a, const Field& b);
double l2_norm(const Field& field);
// Fraction of the squared L2 mass located in the outer part |x| > (1 - fraction) L.
double tail_mass(const Field& field, double fraction = 0.1);

// Per-component Fourier coefficients (unnormalized DFT) of a field.
std::vector<std::complex<double>> fourier(const Field& field, int component);
// Inverse of fourier(); writes the real part into the given component.
void inverse_fourier(std::vector<std::complex<double>>& coeffs, Field& field, int component);
// Wave vector squared norms |xi|^2 for each flat grid index.
std::vector<double> wave_vector_sq(const Grid& grid);

}  // namespace wavefreeze
