#include "wavefreeze/field.hpp"

#include <cmath>
#include <numbers>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/fft.hpp"

namespace wavefreeze {

Grid Grid::make(int d, double L, int N, double T_perp, int N_perp) {
    if (d < 1 || d > 3) throw ConfigError("grid.d must be 1, 2 or 3");
    if (!(L > 0.0)) throw ConfigError("grid.L must be positive");
    if (N < 16 || (N & (N - 1)) != 0) throw ConfigError("grid.N must be a power of two >= 16");
    if (d > 1) {
        if (N_perp < 1) throw ConfigError("grid.N_perp must be >= 1");
        if (!(T_perp > 0.0)) throw ConfigError("grid.T_perp must be positive");
    } else {
        N_perp = 1;
    }
    return Grid{d, L, N, T_perp, N_perp};
}

int Grid::transverse_points() const {
    int t = 1;
    for (int a = 1; a < d; ++a) t *= N_perp;
    return t;
}

double Grid::cell_volume() const { return dx() * std::pow(dx_perp(), d - 1); }

double Grid::torus_volume() const { return std::pow(T_perp, d - 1); }

double Grid::lambda1() const {
    if (d == 1) return std::numeric_limits<double>::infinity();
    return 4.0 * std::numbers::pi * std::numbers::pi / (T_perp * T_perp);
}

std::vector<int> Grid::shape() const {
    std::vector<int> s{N};
    for (int a = 1; a < d; ++a) s.push_back(N_perp);
    return s;
}

double wavenumber(int i, int n, double len) {
    const int j = i < n / 2 ? i : i - n;
    return 2.0 * std::numbers::pi * j / len;
}

Field::Field(const Grid& grid, int components)
    : grid_(grid), components_(components), values_(grid.points() * components, 0.0) {}

Field& Field::operator+=(const Field& other) {
    if (other.values_.size() != values_.size()) throw ConfigError("field shape mismatch");
    vec() += other.vec();
    return *this;
}

Field& Field::operator-=(const Field& other) {
    if (other.values_.size() != values_.size()) throw ConfigError("field shape mismatch");
    vec() -= other.vec();
    return *this;
}

Field& Field::operator*=(double s) {
    vec() *= s;
    return *this;
}

Field& Field::axpy(double a, const Field& x) {
    if (x.values_.size() != values_.size()) throw ConfigError("field shape mismatch");
    vec() += a * x.vec();
    return *this;
}

void Field::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool Field::finite() const { return vec().allFinite(); }

double Field::max_abs() const { return values_.empty() ? 0.0 : vec().cwiseAbs().maxCoeff(); }

Field Field::broadcast(const Field& line, const Grid& target) {
    if (line.grid().N != target.N || line.grid().transverse_points() != 1)
        throw ConfigError("broadcast expects a longitudinal field with matching N");
    Field out(target, line.components());
    const int tp = target.transverse_points();
    for (int c = 0; c < line.components(); ++c)
        for (int i = 0; i < target.N; ++i) {
            const double v = line(c, i);
            double* dst = out.component(c) + static_cast<std::size_t>(i) * tp;
            std::fill(dst, dst + tp, v);
        }
    return out;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

std::vector<std::complex<double>> fourier(const Field& field, int component) {
    const std::size_t M = field.points();
    std::vector<std::complex<double>> buf(M);
    const double* src = field.component(component);
    for (std::size_t p = 0; p < M; ++p) buf[p] = src[p];
    fft_forward(field.grid().shape(), buf.data());
    return buf;
}

void inverse_fourier(std::vector<std::complex<double>>& coeffs, Field& field, int component) {
    const std::size_t M = field.points();
    fft_inverse(field.grid().shape(), coeffs.data());
    double* dst = field.component(component);
    const double scale = 1.0 / static_cast<double>(M);
    for (std::size_t p = 0; p < M; ++p) dst[p] = coeffs[p].real() * scale;
}

namespace {

// Calls fn(flat index, wave vector, nyquist flag per axis) for every mode.
template <typename Fn>
void for_each_mode(const Grid& grid, Fn&& fn) {
    const int tp = grid.transverse_points();
    double xi[3] = {0.0, 0.0, 0.0};
    bool nyq[3] = {false, false, false};
    for (int i = 0; i < grid.N; ++i) {
        xi[0] = wavenumber(i, grid.N, 2.0 * grid.L);
        nyq[0] = (i == grid.N / 2);
        for (int t = 0; t < tp; ++t) {
            int rem = t;
            for (int a = grid.d - 1; a >= 1; --a) {
                const int j = rem % grid.N_perp;
                rem /= grid.N_perp;
                xi[a] = wavenumber(j, grid.N_perp, grid.T_perp);
                nyq[a] = (grid.N_perp % 2 == 0 && j == grid.N_perp / 2);
            }
            fn(static_cast<std::size_t>(i) * tp + t, xi, nyq);
        }
    }
}

}  // namespace

std::vector<double> wave_vector_sq(const Grid& grid) {
    std::vector<double> out(grid.points());
    for_each_mode(grid, [&](std::size_t p, const double* xi, const bool*) {
        double s = 0.0;
        for (int a = 0; a < grid.d; ++a) s += xi[a] * xi[a];
        out[p] = s;
    });
    return out;
}

Field apply_multiplier(const Field& field,
                       const std::function<std::complex<double>(const double* xi, const bool* nyquist)>& m) {
    const Grid& grid = field.grid();
    std::vector<std::complex<double>> mult(grid.points());
    for_each_mode(grid, [&](std::size_t p, const double* xi, const bool* nyq) { mult[p] = m(xi, nyq); });
    Field out(grid, field.components());
    for (int c = 0; c < field.components(); ++c) {
        auto buf = fourier(field, c);
        for (std::size_t p = 0; p < buf.size(); ++p) buf[p] *= mult[p];
        inverse_fourier(buf, out, c);
    }
    return out;
}

Field spectral_derivative(const Field& field, int axis, int order) {
    const Grid& grid = field.grid();
    if (axis < 0 || axis >= grid.d) throw ConfigError("derivative axis out of range");
    if (order < 0) throw ConfigError("derivative order must be non-negative");
    if (order == 0) return field;
    std::vector<std::complex<double>> mult(grid.points());
    const std::complex<double> I(0.0, 1.0);
    for_each_mode(grid, [&](std::size_t p, const double* xi, const bool* nyq) {
        // Odd orders drop the Nyquist mode so the discrete operator stays real
        // and exactly antisymmetric.
        if (nyq[axis] && order % 2 == 1)
            mult[p] = 0.0;
        else
            mult[p] = std::pow(I * xi[axis], order);
    });
    Field out(grid, field.components());
    for (int c = 0; c < field.components(); ++c) {
        auto buf = fourier(field, c);
        for (std::size_t p = 0; p < buf.size(); ++p) buf[p] *= mult[p];
        inverse_fourier(buf, out, c);
    }
    return out;
}

double sobolev_norm_sq(const Field& field, double k) {
    if (k < 0) throw ConfigError("Sobolev index must be non-negative");
    const Grid& grid = field.grid();
    std::vector<double> weight(grid.points());
    const auto xi2 = wave_vector_sq(grid);
    for (std::size_t p = 0; p < weight.size(); ++p) weight[p] = std::pow(1.0 + xi2[p], k);
    double acc = 0.0;
    for (int c = 0; c < field.components(); ++c) {
        auto buf = fourier(field, c);
        for (std::size_t p = 0; p < buf.size(); ++p) acc += weight[p] * std::norm(buf[p]);
    }
    return acc * grid.cell_volume() / static_cast<double>(grid.points());
}

std::vector<double> sobolev_norms_sq(const Field& field, const std::vector<double>& ks) {
    for (double k : ks)
        if (k < 0) throw ConfigError("Sobolev index must be non-negative");
    const Grid& grid = field.grid();
    const auto xi2 = wave_vector_sq(grid);
    std::vector<double> acc(ks.size(), 0.0);
    for (int c = 0; c < field.components(); ++c) {
        auto buf = fourier(field, c);
        for (std::size_t p = 0; p < buf.size(); ++p) {
            const double a = std::norm(buf[p]);
            for (std::size_t i = 0; i < ks.size(); ++i) acc[i] += std::pow(1.0 + xi2[p], ks[i]) * a;
        }
    }
    for (double& a : acc) a *= grid.cell_volume() / static_cast<double>(grid.points());
    return acc;
}

double sobolev_norm(const Field& field, double k) { return std::sqrt(sobolev_norm_sq(field, k)); }

Field translate(const Field& field, double gamma) {
    if (gamma == 0.0) return field;
    return apply_multiplier(field, [gamma](const double* xi, const bool* nyquist) -> std::complex<double> {
        if (nyquist[0]) return std::cos(xi[0] * gamma);
        return std::polar(1.0, -xi[0] * gamma);
    });
}

double inner_product(const Field& a, const Field& b) {
    if (a.size() != b.size() || a.components() != b.components() || !(a.grid() == b.grid()))
        throw ConfigError("inner product of fields with different shapes");
    return a.vec().dot(b.vec()) * a.grid().cell_volume();
}

double l2_norm(const Field& field) { return std::sqrt(inner_product(field, field)); }

double tail_mass(const Field& field, double fraction) {
    const Grid& grid = field.grid();
    const int tp = grid.transverse_points();
    const double edge = (1.0 - fraction) * grid.L;
    double outer = 0.0, total = 0.0;
    for (int c = 0; c < field.components(); ++c)
        for (int i = 0; i < grid.N; ++i) {
            const bool out = std::abs(grid.x(i)) > edge;
            const double* row = field.component(c) + static_cast<std::size_t>(i) * tp;
            for (int t = 0; t < tp; ++t) {
                const double v2 = row[t] * row[t];
                total += v2;
                if (out) outer += v2;
            }
        }
    return total > 0.0 ? outer / total : 0.0;
}

}  // namespace wavefreeze
