#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "common.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/io.hpp"

using namespace wftest;

namespace {

Field sine(const Grid& g, double freq_mult = 1.0) {
    Field f(g, 1);
    for (int i = 0; i < g.N; ++i) f(0, i) = std::sin(freq_mult * std::numbers::pi * g.x(i) / g.L);
    return f;
}

}  // namespace

TEST_CASE("grid validation and derived quantities") {
    CHECK_THROWS_AS(Grid::make(1, 10.0, 100), ConfigError);
    CHECK_THROWS_AS(Grid::make(1, 10.0, 8), ConfigError);
    CHECK_THROWS_AS(Grid::make(4, 10.0, 64), ConfigError);
    const Grid g = Grid::make(1, 10.0, 64);
    CHECK(g.dx() == doctest::Approx(20.0 / 64));
    CHECK(std::isinf(g.lambda1()));
    const Grid g2 = Grid::make(2, 10.0, 64, 4.0, 8);
    CHECK(g2.lambda1() == doctest::Approx(4 * std::numbers::pi * std::numbers::pi / 16.0));
    CHECK(g2.points() == 64u * 8u);
}

TEST_CASE("spectral derivative of a sine") {
    const Grid g = Grid::make(1, 5.0, 64);
    const Field d = spectral_derivative(sine(g), 0, 1);
    double err = 0.0;
    for (int i = 0; i < g.N; ++i)
        err = std::max(err, std::abs(d(0, i) - std::numbers::pi / g.L * std::cos(std::numbers::pi * g.x(i) / g.L)));
    CHECK(err < 1e-10);
}

TEST_CASE("derivative of a constant vanishes and order 2 equals order 1 twice") {
    const Grid g = Grid::make(1, 8.0, 128);
    Field c(g, 1);
    for (auto& v : c.values()) v = 3.7;
    for (int order = 1; order <= 4; ++order) CHECK(spectral_derivative(c, 0, order).max_abs() < 1e-12);
    const Field f = random_bump(g, 1, 11);
    const Field twice = spectral_derivative(spectral_derivative(f, 0, 1), 0, 1);
    const Field once = spectral_derivative(f, 0, 2);
    CHECK((twice - once).max_abs() < 1e-10);
}

TEST_CASE("derivative axis out of range") {
    const Grid g = Grid::make(1, 8.0, 32);
    CHECK_THROWS_AS(spectral_derivative(Field(g, 1), 1, 1), ConfigError);
}

TEST_CASE("sobolev norms") {
    const Grid g = Grid::make(1, 6.0, 64);
    CHECK(sobolev_norm(Field(g, 1), 3) == 0.0);
    CHECK(sobolev_norm_sq(sine(g), 0) == doctest::Approx(g.L).epsilon(1e-8));
    const Field f = random_bump(g, 2, 7);
    for (int k = 0; k < 5; ++k) CHECK(sobolev_norm(f, k) <= sobolev_norm(f, k + 1));
    // Parseval
    CHECK(std::abs(sobolev_norm_sq(f, 0) - inner_product(f, f)) < 1e-10 * inner_product(f, f));
}

TEST_CASE("sobolev norm of a single mode uses the isotropic multiplier") {
    const Grid g = Grid::make(2, 6.0, 32, 2.0, 8);
    Field f(g, 1);
    const int tp = g.transverse_points();
    const double kx = std::numbers::pi / g.L * 2, ky = 2 * std::numbers::pi / g.T_perp;
    for (int i = 0; i < g.N; ++i)
        for (int t = 0; t < tp; ++t) f(0, i * tp + t) = std::cos(kx * g.x(i)) * std::cos(ky * g.dx_perp() * t);
    const double l2 = inner_product(f, f);
    CHECK(sobolev_norm_sq(f, 2) == doctest::Approx(l2 * std::pow(1 + kx * kx + ky * ky, 2)).epsilon(1e-10));
}

TEST_CASE("translation") {
    const Grid g = Grid::make(1, 8.0, 64);
    const Field f = random_bump(g, 1, 3);
    CHECK((translate(f, 0.0) - f).max_abs() == 0.0);
    const Field s = translate(f, g.dx());
    double err = 0.0;
    for (int i = 0; i < g.N; ++i) err = std::max(err, std::abs(s(0, i) - f(0, (i + g.N - 1) % g.N)));
    CHECK(err < 1e-10);
    const Field back = translate(translate(f, 0.37), -0.37);
    CHECK((back - f).max_abs() < 1e-10);
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(sobolev_norm(translate(f, 0.713), k) - sobolev_norm(f, k)) < 1e-9 * sobolev_norm(f, k));
}

TEST_CASE("inner products") {
    const Grid g = Grid::make(1, 8.0, 64);
    const Field a = random_bump(g, 2, 1), b = random_bump(g, 2, 2);
    CHECK(inner_product(a, a) == doctest::Approx(l2_norm(a) * l2_norm(a)));
    CHECK(std::abs(inner_product(sine(g, 1), sine(g, 2))) < 1e-12);
    const double ibp = inner_product(spectral_derivative(a, 0, 1), b) + inner_product(a, spectral_derivative(b, 0, 1));
    CHECK(std::abs(ibp) < 1e-8);
    CHECK_THROWS_AS(inner_product(a, Field(g, 1)), ConfigError);
}

TEST_CASE("broadcast and tail mass") {
    const Grid g = Grid::make(2, 8.0, 32, 3.0, 4);
    const Field line = random_bump(g.longitudinal(), 1, 9);
    const Field full = Field::broadcast(line, g);
    CHECK(inner_product(full, full) == doctest::Approx(g.torus_volume() * inner_product(line, line)));
    CHECK(tail_mass(line) < 1e-6);
    Field edge(g.longitudinal(), 1);
    edge(0, 0) = 1.0;
    CHECK(tail_mass(edge) == 1.0);
}

TEST_CASE("snapshot round trip") {
    const Grid g = Grid::make(1, 8.0, 32);
    const Field f = random_bump(g, 2, 4);
    const std::string path = (std::filesystem::temp_directory_path() / "wavefreeze_test_snapshot.bin").string();
    write_snapshot(path, f, 1.5, 42);
    double t = 0;
    std::uint64_t seed = 0;
    const Field r = read_snapshot(path, &t, &seed);
    CHECK(t == 1.5);
    CHECK(seed == 42u);
    CHECK(r.grid() == g);
    CHECK((r - f).max_abs() == 0.0);
}
