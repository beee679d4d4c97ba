#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/simulator.hpp"
#include "wavefreeze/stability.hpp"

using namespace wftest;

namespace {

const SimulationSetup& setup() {
    static SimulationSetup s(builtin_nagumo(0.25), Grid::make(1, 32.0, 256), 0.25, 2.0);
    return s;
}

PathOptions base_options(double sigma, double T) {
    PathOptions o;
    o.sigma = sigma;
    o.T = T;
    o.dt = 0.01;
    o.record_every = 0;
    o.V_star = setup().proj().complement(random_bump(setup().grid(), 1, 7));
    o.V_star *= 1.0 / sobolev_norm(o.V_star, 4.0);
    return o;
}

}  // namespace

TEST_CASE("scale parameters") {
    CHECK(theta_star(3) == doctest::Approx(0.3));
    CHECK(theta_star(4) == doctest::Approx(4.0 / 14.0));
    CHECK(eta_default(0.1, 3, 0.3) == doctest::Approx(9.95268e-3).epsilon(1e-5));
    CHECK(horizon(0.0, 0.3, 0.1, 3, 3.0, 100.0) == 100.0);
    CHECK(horizon(0.02, 0.3, 0.1, 3, 3.0, 100.0) == 3.0);
    CHECK(horizon(1e-6, 0.3, 0.5, 3, 1.0, 1e4) == std::floor(std::exp(0.25 * std::pow(1e-6, -0.2))));
    CHECK(horizon(1e-12, 0.3, 0.9, 3, 1.0, 1e4) == 1e4);
    CHECK(alpha_of(0.3, 0.1, std::exp(2.0)) == doctest::Approx(std::sqrt(0.09 + 0.02)));
}

TEST_CASE("stability configuration hypotheses") {
    StabilityConfig c;
    c.sigma = 0.1;
    c.theta = 0.3;
    c.eta = eta_default(0.1, 3, 0.3);
    c.delta = 0.0;
    CHECK_NOTHROW(c.validate());
    c.delta = std::sqrt(c.mu * c.eta);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.delta = 0.0;
    c.theta = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.theta = 0.3;
    c.mu = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.mu = 0.1;
    CHECK(c.threshold() == doctest::Approx(c.eta * std::pow(c.alpha(), 4)));
}

TEST_CASE("monitor recursion") {
    const Grid g = Grid::make(1, 32.0, 256);
    SUBCASE("zero fields") {
        MonitorTracker m(0.2, 1.0, 3, 0.1, 0.01);
        const Field z(g, 1);
        m.initialize(z, {0.0, 0.0});
        const Monitors& r = m.update(z, {0.0, 0.0});
        CHECK(r.N_res == 0.0);
        CHECK(r.N_full == 0.0);
    }
    SUBCASE("geometric limit") {
        const double beta = 0.2, dt = 0.01;
        Field z(g, 1);
        for (int i = 0; i < g.N; ++i) z(0, i) = std::exp(-g.x(i) * g.x(i));
        const double c2 = sobolev_norm_sq(z, 2.0);
        MonitorTracker m(beta, 1.0, 3, 0.1, dt);
        m.initialize(z, {});
        const int steps = static_cast<int>(10.0 / beta / dt);
        for (int k = 0; k < steps; ++k) m.update(z, {});
        CHECK(m.current().I == doctest::Approx(c2 / (2.0 * beta)).epsilon(0.01));
    }
    SUBCASE("recursion equals the direct sum") {
        const double beta = 0.3, dt = 0.05;
        MonitorTracker m(beta, 1.0, 3, 0.5, dt);
        std::vector<double> norms;
        Field z = random_bump(g, 1, 1);
        m.initialize(z, {1.0, 2.0});
        for (int k = 0; k < 40; ++k) {
            z *= 0.97;
            norms.push_back(sobolev_norm_sq(z, 2.0));
            m.update(z, {1.0, 2.0});
        }
        double direct = 0.0;
        for (std::size_t k = 0; k < norms.size(); ++k)
            direct += std::exp(-2.0 * beta * dt * (norms.size() - 1 - k)) * dt * norms[k];
        CHECK(std::abs(m.current().I - direct) < 1e-9 * direct);
        const double full = std::pow(0.5, 4) * 1.0 + 0.25 * 2.0 + sobolev_norm_sq(z, 1.0) + direct;
        CHECK(m.current().N_full == doctest::Approx(full).epsilon(1e-9));
    }
}

TEST_CASE("stopping time on a monitor series") {
    const std::vector<double> t = {0.0, 0.1, 0.2, 0.3};
    CHECK(stopping_time(t, {0.0, 0.0, 0.0, 0.0}, 1.0, 1.0, 3, 5.0) == 5.0);
    CHECK(stopping_time(t, {0.0, 1e-9, 2.0, 0.0}, 0.0, 1.0, 3, 5.0) == 0.1);
    CHECK(stopping_time(t, {0.0, 0.5, 2.0, 0.0}, 1.0, 1.0, 3, 5.0) == 0.2);
}

TEST_CASE("Wilson interval") {
    const WilsonInterval w = wilson_interval(5, 10);
    CHECK(w.lower == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(w.upper == doctest::Approx(0.7634).epsilon(1e-3));
    CHECK(wilson_interval(0, 10).lower == 0.0);
    CHECK(wilson_interval(10, 10).upper == doctest::Approx(1.0));
    CHECK(wilson_interval(10, 10).lower < 1.0);
}

TEST_CASE("stability event reduction") {
    StabilityConfig c;
    c.sigma = 0.1;
    c.r = 3;
    PathOutcome ok{true, false, 5.0, 5.0, 0.0, 0.0, {0.0, 0.0}};
    PathOutcome stopped{true, true, 1.0, 5.0, 1.0, 0.0, {0.0, 0.0}};
    const StabilityReport all = stability_event({ok, ok, ok}, c);
    CHECK(all.p_stb == 1.0);
    CHECK(all.positives == 3);
    const StabilityReport none = stability_event({stopped, stopped}, c);
    CHECK(none.p_stb == 0.0);
    CHECK(none.interval.lower == 0.0);
    CHECK_THROWS_AS(stability_event({ok}, c), ConfigError);
    PathOutcome big = ok;
    big.sup_Y_sq = {1.0, 0.0};
    CHECK_FALSE(stability_event({big, ok}, c).pathwise_bounds[0]);
}

TEST_CASE("conditional expectation estimator") {
    SUBCASE("all flags true") {
        std::vector<double> v;
        for (int i = 0; i < 40; ++i) v.push_back(0.1 * i);
        const ConditionalEstimate e = conditional_expectation(v, std::vector<bool>(40, true));
        CHECK(e.mean == doctest::Approx(1.95));
        CHECK(e.correction_bound == 0.0);
        CHECK(e.p == 1.0);
    }
    SUBCASE("synthetic conditional mean") {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> ud;
        std::vector<double> v;
        std::vector<bool> f;
        for (int i = 0; i < 4000; ++i) {
            const bool flag = ud(rng) < 0.8;
            f.push_back(flag);
            v.push_back(flag ? 2.0 + nd(rng) : -5.0 + nd(rng));
        }
        const ConditionalEstimate e = conditional_expectation(v, f);
        CHECK(std::abs(e.mean - 2.0) < 3.0 * e.standard_error);
        CHECK(e.correction_bound > 0.0);
    }
    SUBCASE("bound shrinks like sqrt(1 - p)") {
        std::vector<double> v(1000, 1.0);
        std::vector<bool> f1(1000, true), f2(1000, true);
        for (int i = 0; i < 160; ++i) f1[i] = false;
        for (int i = 0; i < 40; ++i) f2[i] = false;
        const ConditionalEstimate a = conditional_expectation(v, f1), b = conditional_expectation(v, f2);
        const double pred = std::sqrt((1 - b.p) / b.p) / std::sqrt((1 - a.p) / a.p);
        CHECK(b.correction_bound / a.correction_bound == doctest::Approx(pred).epsilon(1e-12));
        CHECK(b.correction_bound < a.correction_bound);
    }
    SUBCASE("too few positives") {
        std::vector<bool> f(100, false);
        for (int i = 0; i < 29; ++i) f[i] = true;
        CHECK_THROWS_AS(conditional_expectation(std::vector<double>(100, 1.0), f), NumericalError);
    }
}

TEST_CASE("exceedance regression") {
    const int r = 3;
    const double mu = 0.3;
    std::vector<double> s, p, e, T;
    for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
        s.push_back(sigma);
        e.push_back(eta_default(sigma, r, theta_star(r)));
        T.push_back(10.0);
        p.push_back(1.0 - 0.5 * 2.0 * T.back() * std::exp(-mu * std::pow(e.back(), 1.0 / r) / std::pow(sigma, 2.0 / r)));
    }
    const double fit = fit_exceedance_mu(s, p, e, T, r);
    CHECK(fit > 0.0);
    CHECK(fit >= mu);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(1.0 - p[i] <= 2.0 * T[i] * std::exp(-fit * std::pow(e[i], 1.0 / r) / std::pow(s[i], 2.0 / r)) + 1e-15);
    CHECK(std::isinf(fit_exceedance_mu({0.1}, {1.0}, {0.01}, {10.0}, r)));
}

TEST_CASE("observed speed") {
    const SpeedSample s = observed_speed(-1.0, -2.0, 4.0, -0.35, 0.2, 0.3, 4.0);
    CHECK(s.C_obs == doctest::Approx(-0.5));
    CHECK(s.a_average == doctest::Approx(0.1));
    CHECK(s.martingale == doctest::Approx(0.15));
    CHECK_THROWS_AS(observed_speed(0, 0, 4.0, 0, 0, 0, 3.0), NumericalError);
    PathOptions o = base_options(0.0, 2.0);
    const PathRecord rec = run_path(setup(), o, 1, 0);
    CHECK(rec.speed(setup().profile().c0).C_obs == doctest::Approx(setup().profile().c0).epsilon(1e-13));
}

TEST_CASE("deterministic decay keeps the stability event") {
    StabilityConfig c;
    c.sigma = 0.0;
    c.delta = 1e-3;
    c.theta = theta_star(3);
    c.eta = 0.01;
    c.T_min = 20.0;
    c.T_cap = 20.0;
    std::vector<PathOutcome> paths;
    PathOptions o = base_options(0.0, c.T());
    o.delta = c.delta;
    o.alpha = c.alpha();
    o.threshold = c.threshold();
    for (int i = 0; i < 3; ++i) paths.push_back(run_path(setup(), o, 1, i).outcome());
    CHECK(stability_event(paths, c).p_stb == 1.0);
}

TEST_CASE("larger thresholds give later stopping times") {
    const double sigma = 0.2;
    PathOptions o = base_options(sigma, 3.0);
    o.stop_on_threshold = false;
    o.alpha = alpha_of(0.0, sigma, 3.0);
    const double eta = eta_default(sigma, 3, theta_star(3));
    std::vector<double> p_stb;
    std::vector<std::vector<double>> t_st;
    for (double scale : {0.1, 1.0, 10.0}) {
        o.threshold = scale * eta * std::pow(o.alpha, 4);
        std::vector<double> ts;
        int events = 0;
        for (int i = 0; i < 6; ++i) {
            const PathRecord r = run_path(setup(), o, 2, i);
            ts.push_back(r.t_st);
            events += r.event;
        }
        t_st.push_back(ts);
        p_stb.push_back(events / 6.0);
    }
    for (std::size_t k = 1; k < t_st.size(); ++k) {
        CHECK(p_stb[k] >= p_stb[k - 1]);
        for (std::size_t i = 0; i < t_st[k].size(); ++i) CHECK(t_st[k][i] >= t_st[k - 1][i]);
    }
}

TEST_CASE("martingale part of the observed speed") {
    const double sigma = 0.1;
    std::vector<double> var;
    for (double T : {2.0, 4.0}) {
        PathOptions o = base_options(sigma, T);
        o.expansion = false;
        std::vector<double> b;
        for (int i = 0; i < 100; ++i) b.push_back(run_path(setup(), o, 3, i).speed(setup().profile().c0).martingale);
        double mean = 0.0, sq = 0.0;
        for (double x : b) mean += x / b.size();
        for (double x : b) sq += (x - mean) * (x - mean) / (b.size() - 1);
        CHECK(std::abs(mean) < 3.0 * std::sqrt(sq / b.size()));
        var.push_back(sq);
    }
    CHECK(var[1] / var[0] > 0.3);
    CHECK(var[1] / var[0] < 0.75);
}

TEST_CASE("pathwise event bounds at theta_*") {
    const double sigma = 0.02;
    StabilityConfig c;
    c.sigma = sigma;
    c.theta = theta_star(3);
    c.eta = eta_default(sigma, 3, c.theta);
    c.T_min = 10.0;
    c.T_cap = 10.0;
    PathOptions o = base_options(sigma, c.T());
    o.alpha = c.alpha();
    o.threshold = c.threshold();
    std::vector<PathOutcome> paths;
    for (int i = 0; i < 4; ++i) paths.push_back(run_path(setup(), o, 6, i).outcome());
    const StabilityReport rep = stability_event(paths, c);
    CHECK(rep.positives > 0);
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (rep.event[i]) CHECK(rep.pathwise_bounds[i]);
}
