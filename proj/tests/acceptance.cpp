#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "wavefreeze/config.hpp"
#include "wavefreeze/ensemble.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/expansion.hpp"
#include "wavefreeze/limits.hpp"
#include "wavefreeze/validate.hpp"

using namespace wavefreeze;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Result {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
    char buf[1024];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

const PreparedConfig& desk() {
    static const PreparedConfig p = prepare_config(parse_config(nlohmann::json{{"dt", 0.01}}));
    return p;
}

int threads() { return resolve_threads(0); }

PathOptions desk_options(double sigma, double delta, double T) {
    PathOptions o;
    o.sigma = sigma;
    o.delta = delta;
    o.dt = 0.01;
    o.T = T;
    o.r = 3;
    o.k_star = 1.0;
    o.V_star = desk().V_star;
    o.record_every = 0;
    return o;
}

std::vector<PathRecord> run_paths(const PathOptions& o, std::uint64_t seed, std::size_t count) {
    std::vector<PathRecord> out(count);
    parallel_for(count, threads(), [&](std::size_t i) {
        PathRecord r = run_path(*desk().setup, o, seed, i);
        r.rows.clear();
        out[i] = std::move(r);
    });
    return out;
}

// First-order field alone: Y1 <- S(dt)(Y1 + sigma rho_B dW), Y1(0) = 0.
class FirstOrder {
public:
    FirstOrder(double sigma, double dt)
        : ctx_(desk().setup->context(sigma)), src_(constant_sources(ctx_)), prop_(desk().setup->propagator(dt)), dt_(dt) {}

    template <class Visit>
    void run(std::uint64_t seed, std::uint64_t stream, std::size_t steps, const std::vector<double>& sigmas,
             Visit visit) const {
        const NoiseSampler sampler(desk().setup->noise(), seed, stream);
        std::vector<Field> Y(sigmas.size(), Field(desk().setup->grid(), 1));
        for (std::size_t k = 0; k < steps; ++k) {
            const Field b = apply_rho_B(ctx_, src_, sampler.sample_increment(k, dt_));
            for (std::size_t s = 0; s < sigmas.size(); ++s) {
                Y[s].axpy(sigmas[s], b);
                Y[s] = prop_->apply(Y[s]);
            }
            visit(k + 1, Y);
        }
    }

private:
    FreezeContext ctx_;
    ConstantSources src_;
    std::shared_ptr<const Propagator> prop_;
    double dt_;
};

double slope(const std::vector<double>& x, const std::vector<double>& y, double* r2 = nullptr) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    if (r2) *r2 = cov * cov / (vx * vy);
    return cov / vx;
}

Result criterion1() {
    const auto start = Clock::now();
    const auto model = builtin_nagumo(0.25);
    const Grid g = Grid::make(1, 50.0, 1024);
    const WaveProfile p = solve_profile(*model, g);
    const double secs = seconds_since(start);
    const double expect = std::sqrt(2.0) * (0.25 - 0.5);
    double profile_err = 0.0;
    for (int i = 0; i < g.N; ++i)
        profile_err = std::max(profile_err, std::abs(p.phi0(0, i) - logistic_derivative(g.x(i) / std::sqrt(2.0), 0)));
    const double speed_err = std::abs(p.c0 - expect);
    const bool pass = speed_err < 1e-6 && std::abs(std::abs(p.c0) - std::sqrt(2.0) * 0.25) < 1e-6 &&
                      profile_err < 1e-6 && p.residual < 1e-8 && secs < 10.0;
    return {pass, fmt("c0=%.12f |c0-sqrt2(a-1/2)|=%.2e profile_err=%.2e ode_residual=%.2e time=%.2fs", p.c0, speed_err,
                      profile_err, p.residual, secs)};
}

Result criterion2() {
    const SimulationSetup& s = *desk().setup;
    const SpectralGap sg = spectral_gap(*s.model(), s.profile().line, s.profile());
    const DecayCertificate dc = decay_certificate(s.op(), s.proj());
    const Eigen::VectorXcd e = s.op().right().col(s.op().neutral_index());
    const Eigen::VectorXd d = Field(s.profile().dphi0[0]).vec();
    const double cos = std::abs(e.dot(d.cast<std::complex<double>>())) / (e.norm() * d.norm());
    const double rel = std::abs(dc.beta_hat - s.op().gap()) / s.op().gap();
    const bool pass = sg.near_zero_count == 1 && rel <= 0.1 && cos > 1.0 - 1e-6;
    return {pass, fmt("near_zero=%d gap=%.5f beta_hat=%.5f rel=%.3f cos=1-%.1e", sg.near_zero_count, s.op().gap(),
                      dc.beta_hat, rel, 1.0 - cos)};
}

Result criterion3() {
    double sup[2] = {0.0, 0.0};
    const double dts[2] = {0.01, 0.005};
    for (int k = 0; k < 2; ++k) {
        PathOptions o = desk_options(0.05, 0.1, 20.0);
        o.dt = dts[k];
        o.expansion = false;
        for (const auto& r : run_paths(o, 303, 100)) {
            if (r.status == PathStatus::blown_up) return {false, "blown-up path"};
            sup[k] = std::max(sup[k], r.sup_orthogonality);
        }
    }
    const double ratio = sup[0] > 0.0 ? sup[1] / sup[0] : 0.0;
    const bool roundoff = sup[0] <= 1e-10 && sup[1] <= 1e-10;
    const bool pass = sup[0] <= 1e-4 && sup[1] <= 1e-4 && (ratio <= 0.55 || roundoff);
    return {pass, fmt("sup|<V,psi>|/|psi| dt=0.01: %.2e dt=0.005: %.2e ratio=%.2f%s", sup[0], sup[1], ratio,
                      roundoff ? " (both at roundoff)" : "")};
}

Result criterion4() {
    const SimulationSetup& s = *desk().setup;
    const auto prop = s.propagator(0.01);
    const double sigma = 0.05, delta = 0.05;
    const ExpansionEngine a(s.context(sigma), *prop, 3, 1.0), b(s.context(2 * sigma), *prop, 3, 1.0);
    ExpansionState ya = a.initial_state(delta, desk().V_star), yb = b.initial_state(2 * delta, desk().V_star);
    const NoiseSampler sampler(s.noise(), 404, 0);
    for (std::uint64_t k = 0; k < 300; ++k) {
        const Field dW = sampler.sample_increment(k, 0.01);
        a.step(ya, dW);
        b.step(yb, dW);
    }
    double err[2];
    for (int j = 1; j <= 2; ++j) {
        const Field expect = std::pow(2.0, j) * ya.Y[j - 1];
        err[j - 1] = l2_norm(yb.Y[j - 1] - expect) / l2_norm(expect);
    }
    return {err[0] < 1e-10 && err[1] < 1e-10, fmt("rel err j=1: %.2e j=2: %.2e (300 steps)", err[0], err[1])};
}

// Shared by criteria 5 and 10.
struct FirstOrderMoments {
    std::vector<double> t, mean, se;
    double runtime = 0.0;
};

const FirstOrderMoments& first_order_moments() {
    static const FirstOrderMoments m = [] {
        const auto start = Clock::now();
        const double dt = 0.01, beta = desk().setup->op().beta();
        const std::size_t steps = static_cast<std::size_t>(std::ceil(10.0 / beta / dt));
        const std::size_t every = 25, paths = 200;
        const FirstOrder fo(1.0, dt);
        const std::size_t samples = steps / every + 1;
        std::vector<std::vector<double>> values(paths, std::vector<double>(samples, 0.0));
        parallel_for(paths, threads(), [&](std::size_t i) {
            fo.run(505, i, steps, {1.0}, [&](std::size_t k, const std::vector<Field>& Y) {
                if (k % every == 0 || k == steps) values[i][k == steps ? samples - 1 : k / every] = std::pow(l2_norm(Y[0]), 2);
            });
        });
        FirstOrderMoments out;
        for (std::size_t j = 0; j < samples; ++j) {
            std::vector<double> col;
            for (const auto& v : values) col.push_back(v[j]);
            const MeanEstimate e = mean_estimate(col);
            out.t.push_back(j + 1 == samples ? steps * dt : j * every * dt);
            out.mean.push_back(e.mean);
            out.se.push_back(e.standard_error);
        }
        out.runtime = seconds_since(start);
        return out;
    }();
    return m;
}

Result criterion5() {
    const auto start = Clock::now();
    const SimulationSetup& s = *desk().setup;
    const FreezeContext ctx = s.context(1.0);
    const CovarianceOperator cov = stationary_covariance(ctx, s.op(), s.proj(), true);
    const double routes = std::abs(cov.trace - cov.trace_smith) / cov.trace;
    const FirstOrderMoments& m = first_order_moments();
    const double mc = m.mean.back(), se = m.se.back();
    const double z = (mc - cov.trace) / se;
    const double secs = seconds_since(start);
    const bool pass = routes < 1e-6 && std::abs(z) < 3.0 && secs < 300.0;
    return {pass, fmt("trace quad=%.8f lyap=%.8f rel=%.1e; MC t=%.1f: %.6f +- %.6f (z=%.2f, 200 paths) time=%.0fs",
                      cov.trace, cov.trace_smith, routes, m.t.back(), mc, se, z, secs)};
}

Result criterion6() {
    const auto start = Clock::now();
    const double sigma = 0.02, T = 40.0;
    const SimulationSetup& s = *desk().setup;
    const FreezeContext ctx = s.context(sigma);
    const double c2 = wave_speed_c2(ctx, stationary_covariance(ctx, s.op(), s.proj(), false)).c2;
    StabilityConfig sc;
    sc.sigma = sigma;
    sc.theta = theta_star(3);
    sc.eta = eta_default(sigma, 3, sc.theta);
    sc.T_min = sc.T_cap = T;
    PathOptions o = desk_options(sigma, 0.0, T);
    o.alpha = sc.alpha();
    o.threshold = sc.threshold();
    o.stop_on_threshold = false;
    const std::vector<PathRecord> paths = run_paths(o, 606, 500);
    std::vector<double> a, C;
    std::vector<bool> flags;
    for (const auto& r : paths) {
        if (r.status == PathStatus::blown_up) continue;
        const SpeedSample sp = r.speed(s.profile().c0);
        a.push_back(sp.a_average / (sigma * sigma));
        C.push_back(sp.C_obs - s.profile().c0 - c2 * sigma * sigma);
        flags.push_back(r.event);
    }
    const MeanEstimate ea = mean_estimate(a);
    const double za = (ea.mean - c2) / ea.standard_error;
    std::string cond = "conditional: too few events";
    bool cond_ok = false;
    try {
        const ConditionalEstimate ce = conditional_expectation(C, flags);
        const double zc = ce.mean / ce.standard_error;
        cond_ok = std::abs(zc) < 3.0;
        cond = fmt("E[C_obs|A]-c0-c2 s^2=%.2e +- %.2e (z=%.2f, p=%.3f, bound=%.1e)", ce.mean, ce.standard_error, zc, ce.p,
                   ce.correction_bound);
    } catch (const NumericalError&) {
    }
    const double secs = seconds_since(start);
    const bool pass = std::abs(za) < 3.0 && cond_ok && secs < 1800.0 && a.size() >= 500;
    return {pass, fmt("c2=%.6f MC a/s^2=%.6f +- %.6f (z=%.2f, %zu paths); ", c2, ea.mean, ea.standard_error, za,
                      a.size()) + cond + fmt(" time=%.0fs", secs)};
}

Result criterion7() {
    const std::vector<double> sigmas = {0.02, 0.04, 0.08};
    std::vector<double> lx, ly;
    std::string detail;
    for (double sigma : sigmas) {
        PathOptions o = desk_options(sigma, 0.0, 20.0);
        o.stop_on_threshold = false;
        std::vector<double> z;
        for (const auto& r : run_paths(o, 707, 100))
            if (r.status != PathStatus::blown_up) z.push_back(sobolev_norm(r.Z, 1.0));
        const double m = mean_estimate(z).mean;
        lx.push_back(std::log(sigma));
        ly.push_back(std::log(m));
        detail += fmt("E|Z|(%.2f)=%.3e ", sigma, m);
    }
    const double s = slope(lx, ly);
    return {s >= 2.4 && s <= 3.6, detail + fmt("slope=%.3f", s)};
}

Result criterion8() {
    const double sigma = 0.02, dt = 0.01;
    const std::vector<double> horizons = {4.0, 16.0, 64.0, 256.0};
    const std::size_t paths = 80;
    const std::size_t steps = static_cast<std::size_t>(std::llround(horizons.back() / dt));
    const double k1 = 1.0 + 3.0;
    const FirstOrder fo(sigma, dt);
    std::vector<std::vector<double>> sup(paths, std::vector<double>(2 * horizons.size(), 0.0));
    parallel_for(paths, threads(), [&](std::size_t i) {
        double run[2] = {0.0, 0.0};
        fo.run(808, i, steps, {sigma, 2.0 * sigma}, [&](std::size_t k, const std::vector<Field>& Y) {
            for (int s = 0; s < 2; ++s) run[s] = std::max(run[s], sobolev_norm_sq(Y[s], k1));
            for (std::size_t h = 0; h < horizons.size(); ++h)
                if (k == static_cast<std::size_t>(std::llround(horizons[h] / dt)))
                    for (int s = 0; s < 2; ++s) sup[i][s * horizons.size() + h] = run[s];
        });
    });
    std::vector<double> lnT, m1, m2;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        double a = 0, b = 0;
        for (const auto& s : sup) {
            a += s[h] / paths;
            b += s[horizons.size() + h] / paths;
        }
        lnT.push_back(std::log(horizons[h]));
        m1.push_back(a);
        m2.push_back(b);
    }
    double r2a, r2b;
    const double s1 = slope(lnT, m1, &r2a), s2 = slope(lnT, m2, &r2b);
    const double ratio = s2 / s1;
    const bool pass = r2a > 0.9 && r2b > 0.9 && s1 > 0 && s2 > 0 && ratio >= 3.5 && ratio <= 4.5;
    return {pass, fmt("E sup|Y1|^2_H4 at T=4..256: %.3e %.3e %.3e %.3e; slope=%.3e R2=%.3f (2s: R2=%.3f) ratio=%.3f",
                      m1[0], m1[1], m1[2], m1[3], s1, r2a, r2b, ratio)};
}

Result criterion9() {
    const double T = 1e4 * 0.01;
    double p[2];
    std::size_t exceed[2];
    WilsonInterval w[2];
    const double sigmas[2] = {0.02, 0.2};
    for (int k = 0; k < 2; ++k) {
        StabilityConfig sc;
        sc.sigma = sigmas[k];
        sc.theta = theta_star(3);
        sc.eta = eta_default(sc.sigma, 3, sc.theta);
        sc.T_min = sc.T_cap = T;
        sc.validate();
        PathOptions o = desk_options(sc.sigma, 0.0, sc.T());
        o.alpha = sc.alpha();
        o.threshold = sc.threshold();
        std::vector<PathOutcome> outcomes;
        for (const auto& r : run_paths(o, 909, 200)) outcomes.push_back(r.outcome());
        const StabilityReport rep = stability_event(outcomes, sc);
        p[k] = rep.p_stb;
        w[k] = rep.interval;
        exceed[k] = outcomes.size() - rep.positives;
    }
    const bool pass = p[0] >= 0.99 && (1.0 - p[1]) > (1.0 - p[0]);
    return {pass, fmt("T=%.0f p_stb(0.02)=%.3f [%.3f,%.3f] exceed=%zu; p_stb(0.2)=%.3f [%.3f,%.3f] exceed=%zu", T, p[0],
                      w[0].lower, w[0].upper, exceed[0], p[1], w[1].lower, w[1].upper, exceed[1])};
}

Result criterion10() {
    const FirstOrderMoments& m = first_order_moments();
    const DecayCertificate dc = decay_certificate(desk().setup->op(), desk().setup->proj());
    const RateFit fit = convergence_rate_fit(m.t, m.mean);
    return {fit.rate >= 0.4 * dc.beta_hat,
            fmt("fitted rate=%.4f limit=%.5f rms=%.1e; 0.4*beta_hat=%.4f", fit.rate, fit.limit, fit.rms, 0.4 * dc.beta_hat)};
}

Result criterion11() {
    const auto start = Clock::now();
    ValidationOptions o;
    o.threads = 1;
    const ValidationReport r = validate(desk(), o);
    std::size_t failed = 0;
    std::string names;
    for (const auto& c : r.checks)
        if (!c.passed) {
            ++failed;
            names += " " + c.name;
        }
    const double secs = seconds_since(start);
    return {r.passed() && secs < 600.0,
            fmt("%zu checks, %zu failed, time=%.1fs", r.checks.size(), failed, secs) + names};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Result()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                           criterion5, criterion6, criterion7, criterion8,
                                                           criterion9, criterion10, criterion11};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.count(id)) continue;
        Result r;
        try {
            r = criteria[i]();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failures += !r.pass;
        std::printf("criterion %2d: %s  %s\n", id, r.pass ? "PASS" : "FAIL", r.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
