#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/expansion.hpp"

using namespace wftest;

namespace {

constexpr double kDt = 0.01;

const Propagator& propagator() {
    static Propagator p(*Setup::nagumo().op, kDt);
    return p;
}

Field unit_perturbation(std::uint64_t seed) {
    const Setup& s = Setup::nagumo();
    Field v = s.proj->complement(random_bump(s.grid, 1, seed));
    v *= 1.0 / sobolev_norm(v, 4);
    return v;
}

ExpansionState run(const ExpansionEngine& eng, double delta, const Field& V_star, int steps, std::uint64_t seed) {
    const NoiseSampler sampler(Setup::nagumo().noise, seed, 0);
    ExpansionState st = eng.initial_state(delta, V_star);
    for (int i = 0; i < steps; ++i) eng.step(st, sampler.sample_increment(i, kDt));
    return st;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("ordered compositions") {
    CHECK(ordered_compositions(0, 0).size() == 1);
    CHECK(ordered_compositions(2, 0).empty());
    CHECK(ordered_compositions(3, 2).size() == 2);
    CHECK(ordered_compositions(4, 2).size() == 3);
    CHECK(ordered_compositions(5, 3).size() == 6);
    for (const auto& c : ordered_compositions(6, 3)) CHECK(c[0] + c[1] + c[2] == 6);
}

TEST_CASE("constant sources are orthogonal to psi") {
    const Setup& s = Setup::nagumo();
    const FreezeContext ctx = s.context(0.1);
    const ConstantSources src = constant_sources(ctx);
    CHECK(std::abs(inner_product(src.rho_N, ctx.psi())) < 1e-8);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(inner_product(apply_rho_B(ctx, src, random_bump(s.grid, 1, 30 + i)), ctx.psi())) < 1e-8);
    CHECK((src.rho_N - R_II(ctx, Field(s.grid, 1)) - Upsilon(ctx, Field(s.grid, 1))).max_abs() < 1e-14);
}

TEST_CASE("low-order assembled terms") {
    const Setup& s = Setup::nagumo();
    const double sigma = 0.1;
    const ExpansionEngine eng(s.context(sigma), propagator(), 3, 1.0);
    const Field dW = NoiseSampler(s.noise, 1, 0).sample_increment(0, kDt);
    const ExpansionState zero = eng.initial_state(0.0, unit_perturbation(1));
    CHECK(eng.assemble_N(zero, 1).max_abs() == 0.0);
    CHECK((eng.assemble_B(zero, 1, dW) - sigma * apply_rho_B(eng.context(), eng.sources(), dW)).max_abs() == 0.0);
    CHECK((eng.assemble_N(zero, 2) - sigma * sigma * eng.sources().rho_N).max_abs() == 0.0);
    CHECK_THROWS_AS(eng.assemble_N(zero, 3), ConfigError);
}

TEST_CASE("second-order term against the analytic Hessian") {
    const Setup& s = Setup::nagumo();
    const ExpansionEngine eng(s.context(0.0), propagator(), 3, 1.0);
    const ExpansionState st = eng.initial_state(0.3, unit_perturbation(2));
    const Field& y = st.Y[0];
    Field h(s.grid, 1);
    for (int i = 0; i < s.grid.N; ++i) h(0, i) = 0.5 * (2 * 1.25 - 6 * eng.context().phi0()(0, i)) * y(0, i) * y(0, i);
    h.axpy(-inner_product(h, eng.context().psi()), eng.context().dphi0());
    CHECK(l2_norm(eng.assemble_N(st, 2) - h) < 1e-5 * l2_norm(h));
}

TEST_CASE("third-order composition counts ordered tuples") {
    const Setup& s = Setup::nagumo();
    const ExpansionEngine eng(s.context(0.0), propagator(), 4, 1.0);
    ExpansionState st = eng.initial_state(0.2, unit_perturbation(3));
    st.Y[1] = random_bump(s.grid, 1, 4, 0.05);
    const Field zero(s.grid, 1);
    const FieldMap RI = [&](const Field& v) { return R_I(eng.context(), v); };
    Field expect = directional_derivative(RI, {&st.Y[0], &st.Y[1]}, zero);
    expect.axpy(1.0 / 6.0, directional_derivative(RI, {&st.Y[0], &st.Y[0], &st.Y[0]}, zero));
    CHECK(l2_norm(eng.assemble_N(st, 3) - expect) < 1e-6 * l2_norm(expect));
}

TEST_CASE("deterministic hierarchy") {
    const Setup& s = Setup::nagumo();
    const ExpansionEngine eng(s.context(0.0), propagator(), 3, 1.0);
    const Field vs = unit_perturbation(5);
    const ExpansionState st = run(eng, 0.1, vs, 200, 1);
    CHECK(rel_diff(st.Y[0], s.op->apply_semigroup(2.0, 0.1 * vs)) < 1e-6);
    const ExpansionState again = run(eng, 0.1, vs, 200, 2);
    CHECK(st.Y[1].values() == again.Y[1].values());
    const ExpansionState none = run(eng, 0.0, vs, 50, 1);
    CHECK(none.Y_tay.max_abs() == 0.0);
}

TEST_CASE("pathwise homogeneity in (sigma, delta)") {
    const Setup& s = Setup::nagumo();
    const Field vs = unit_perturbation(6);
    const double sigma = 0.05, delta = 0.05;
    const ExpansionEngine base(s.context(sigma), propagator(), 3, 1.0);
    const ExpansionState a = run(base, delta, vs, 150, 9);
    for (double lambda : {2.0, 0.5}) {
        const ExpansionEngine scaled(s.context(lambda * sigma), propagator(), 3, 1.0);
        const ExpansionState b = run(scaled, lambda * delta, vs, 150, 9);
        for (int j = 1; j <= 2; ++j) {
            const Field expect = std::pow(lambda, j) * a.Y[j - 1];
            CHECK(l2_norm(b.Y[j - 1] - expect) <= 1e-10 * l2_norm(expect));
        }
    }
}

TEST_CASE("neutral orthogonality along a noisy path") {
    const Setup& s = Setup::nagumo();
    const ExpansionEngine eng(s.context(0.1), propagator(), 3, 1.0);
    const NoiseSampler sampler(s.noise, 3, 0);
    ExpansionState st = eng.initial_state(0.1, unit_perturbation(7));
    for (int i = 0; i < 300; ++i) {
        eng.step(st, sampler.sample_increment(i, kDt));
        if (i % 50 == 0) {
            for (const auto& y : st.Y) CHECK(std::abs(inner_product(y, eng.context().psi())) <= 1e-6 * l2_norm(y));
        }
    }
    eng.update_diagnostics(st);
    CHECK(st.norms.size() == 2);
    CHECK(st.norms[0] == doctest::Approx(sobolev_norm(st.Y[0], 4)));
    CHECK(st.norms[1] == doctest::Approx(sobolev_norm(st.Y[1], 3)));
}

TEST_CASE("remainders") {
    const Setup& s = Setup::nagumo();
    const ExpansionEngine eng(s.context(0.1), propagator(), 3, 1.0);
    const ExpansionState zero = eng.initial_state(0.0, unit_perturbation(8));
    const auto rem0 = eng.remainders(zero);
    CHECK(rem0.N_rem.max_abs() == 0.0);
    const Field xi = random_bump(s.grid, 1, 9);
    CHECK(rem0.B_rem(xi).max_abs() == 0.0);

    const ExpansionState st = run(eng, 0.1, unit_perturbation(8), 100, 4);
    CHECK(std::abs(inner_product(eng.remainders(st).N_rem, eng.context().psi())) < 1e-7);

    const ExpansionEngine det(s.context(0.0), propagator(), 3, 1.0);
    std::vector<double> lx, ly;
    for (double delta : {1e-1, 1e-2, 1e-3}) {
        const ExpansionState d = run(det, delta, unit_perturbation(10), 50, 1);
        lx.push_back(std::log(delta));
        ly.push_back(std::log(l2_norm(det.remainders(d).N_rem)));
    }
    CHECK(slope(lx, ly) >= 3 - 0.3);
}

TEST_CASE("convolution diagnostics") {
    const Setup& s = Setup::nagumo();
    const FreezeContext ctx = s.context(0.1);
    const ConstantSources src = constant_sources(ctx);
    const double beta = s.op->beta();
    ConvolutionDiagnostics zero(*s.op, *s.proj, propagator(), beta, 1.0);
    for (int i = 0; i < 10; ++i) zero.add_drift(Field(s.grid, 1));
    CHECK(zero.sup_E() == 0.0);
    CHECK(zero.sup_I() == 0.0);

    ConvolutionDiagnostics diag(*s.op, *s.proj, propagator(), beta, 1.0);
    const int steps = static_cast<int>(std::ceil(10.0 / beta / kDt));
    std::vector<double> energies;
    for (int i = 0; i < steps; ++i) {
        diag.add_drift(src.rho_N);
        energies.push_back(sobolev_norm_sq(diag.E(), 2.0));
    }
    const Field limit = solve_on_range(*s.op, *s.proj, s.proj->complement(src.rho_N));
    CHECK(rel_diff(diag.E(), limit) < 0.02);
    double direct = 0.0;
    for (int i = 0; i < steps; ++i) direct += std::exp(-beta * (steps - 1 - i) * kDt) * kDt * energies[i];
    CHECK(std::abs(diag.I() - direct) < 1e-10 * direct);

    const NoiseSampler sampler(s.noise, 2, 0);
    std::vector<Field> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(apply_rho_B(ctx, src, sampler.sample_increment(i, kDt)));
    const ConvolutionSummary sum = convolution_diagnostics(*s.op, *s.proj, propagator(), samples, true, beta, 1.0);
    CHECK(sum.sup_E > 0.0);
    CHECK(sum.sup_I > 0.0);
}
