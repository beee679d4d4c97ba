#include "wavefreeze/validate.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "wavefreeze/ensemble.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/expansion.hpp"
#include "wavefreeze/limits.hpp"
#include "wavefreeze/linear_flow.hpp"
#include "wavefreeze/noise.hpp"
#include "wavefreeze/nonlinear.hpp"

namespace wavefreeze {

namespace {

class Battery {
public:
    explicit Battery(ValidationReport& report) : report_(report) {}

    // Records |value| <= tolerance; exceptions become failures.
    void bound(const std::string& name, double tolerance, const std::function<double()>& value) {
        ValidationCheck c;
        c.name = name;
        c.tolerance = tolerance;
        try {
            c.value = value();
            c.passed = std::isfinite(c.value) && std::abs(c.value) <= tolerance;
        } catch (const std::exception& e) {
            c.passed = false;
            c.detail = e.what();
        }
        report_.checks.push_back(std::move(c));
    }

    void truth(const std::string& name, const std::function<bool()>& predicate, const std::string& detail = {}) {
        ValidationCheck c;
        c.name = name;
        c.detail = detail;
        try {
            c.passed = predicate();
            c.value = c.passed ? 1.0 : 0.0;
        } catch (const std::exception& e) {
            c.passed = false;
            c.detail = e.what();
        }
        c.tolerance = 1.0;
        report_.checks.push_back(std::move(c));
    }

private:
    ValidationReport& report_;
};

double relative(const Field& a, const Field& b) { return l2_norm(a - b) / std::max(l2_norm(b), 1e-300); }

struct Coefficients {
    double c0, beta_tw, c2;
};

Coefficients coefficients(const ExperimentConfig& cfg, int N, double sigma) {
    ExperimentConfig c = cfg;
    c.grid.N = N;
    c.V_star.kind = "zero";
    const PreparedConfig p = prepare_config(c);
    const FreezeContext ctx = p.setup->context(sigma, cfg.k_c_sign);
    const CovarianceOperator cov = stationary_covariance(ctx, p.setup->op(), p.setup->proj(), false);
    return {p.setup->profile().c0, p.setup->op().beta_tw(), wave_speed_c2(ctx, cov).c2};
}

}  // namespace

bool ValidationReport::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json j;
    j["passed"] = passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json e = {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}};
        if (!c.detail.empty()) e["detail"] = c.detail;
        j["checks"].push_back(e);
    }
    j["refinement"] = nlohmann::json::array();
    for (const auto& r : refinement)
        j["refinement"].push_back({{"quantity", r.quantity}, {"coarse", r.coarse}, {"fine", r.fine}, {"delta", r.delta}});
    j["wall_time"] = wall_time;
    return j;
}

ValidationReport validate(const PreparedConfig& prepared, const ValidationOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    ValidationReport report;
    Battery b(report);
    const ExperimentConfig& cfg = prepared.config;
    const SimulationSetup& setup = *prepared.setup;
    const Grid& grid = setup.grid();
    const WaveProfile& profile = setup.profile();
    const LinearOperator& op = setup.op();
    const Projector& proj = setup.proj();
    const int n = setup.model()->n();
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.05;
    const FreezeContext ctx = setup.context(sigma, cfg.k_c_sign);
    const Field v = proj.complement(seeded_bump(grid, n, 11));
    const Field w = proj.complement(seeded_bump(grid, n, 12));

    // Wave and spectrum.
    b.bound("wave.ode_residual", 1e-8, [&] { return profile.residual; });
    if (cfg.model.name == "nagumo") {
        const double a = cfg.model.params.count("a") ? cfg.model.params.at("a") : 0.25;
        b.bound("wave.closed_form_speed", 1e-6, [&] { return profile.c0 - std::sqrt(2.0) * (a - 0.5); });
        b.bound("wave.closed_form_profile", 1e-6, [&] {
            double err = 0.0;
            for (int i = 0; i < grid.N; ++i)
                err = std::max(err, std::abs(profile.phi0(0, i) - logistic_derivative(profile.line.x(i) / std::sqrt(2.0), 0)));
            return err;
        });
    }
    b.truth("wave.single_neutral_eigenvalue", [&] { return spectral_gap(*setup.model(), profile.line, profile).near_zero_count == 1; });
    b.bound("wave.neutral_mode_parallel", 1e-6, [&] {
        const Eigen::VectorXcd e = op.right().col(op.neutral_index());
        const Eigen::VectorXd d = Field(profile.dphi0[0]).vec();
        return 1.0 - std::abs(e.dot(d.cast<std::complex<double>>())) / (e.norm() * d.norm());
    });
    b.bound("wave.neutral_residual", 1e-8, [&] { return l2_norm(op.apply(proj.dphi0())) / l2_norm(proj.dphi0()); });
    b.bound("wave.adjoint_residual", 1e-8, [&] { return profile.adjoint_residual; });
    b.truth("wave.gap_positive", [&] { return profile.gap > 0.0 && op.beta() > 0.0; });

    // Adjoint normalization and projector; the fault injection acts here.
    WaveProfile probe = profile;
    probe.psi *= options.psi_scale;
    const Projector P(probe, grid);
    b.bound("orthogonality.adjoint_normalization", 1e-10, [&] {
        return inner_product(probe.psi, probe.dphi0[0]) - 1.0;
    });
    b.bound("orthogonality.complement", 1e-10, [&] {
        const Field x = seeded_bump(grid, n, 13);
        return inner_product(P.complement(x), P.psi()) / (l2_norm(x) * l2_norm(P.psi()));
    });
    b.bound("orthogonality.projector_idempotent", 1e-10, [&] {
        const Field x = seeded_bump(grid, n, 14);
        return l2_norm(P.apply(P.apply(x)) - P.apply(x)) / l2_norm(x);
    });
    b.bound("orthogonality.neutral_fixed", 1e-10, [&] { return relative(P.apply(P.dphi0()), P.dphi0()); });

    // Field toolkit.
    b.bound("field.parseval", 1e-12, [&] { return sobolev_norm(v, 0.0) / l2_norm(v) - 1.0; });
    b.bound("field.translation_group", 1e-10, [&] { return relative(translate(translate(v, 0.7), -1.9), translate(v, -1.2)); });
    b.bound("field.derivative_antisymmetry", 1e-12, [&] {
        return (inner_product(spectral_derivative(v, 0, 1), w) + inner_product(v, spectral_derivative(w, 0, 1))) /
               (l2_norm(v) * l2_norm(w));
    });

    // Noise.
    b.truth("noise.determinism", [&] {
        const NoiseSampler s1(setup.noise(), cfg.seed, 3), s2(setup.noise(), cfg.seed, 3), s3(setup.noise(), cfg.seed, 4);
        const Field a = s1.sample_increment(17, 0.01), c = s2.sample_increment(17, 0.01), d = s3.sample_increment(17, 0.01);
        return a.values() == c.values() && a.values() != d.values();
    });
    b.truth("noise.spectrum_nonnegative", [&] { return setup.noise()->min_eigenvalue() >= 0.0; });

    // Linear flow.
    b.bound("linear.semigroup", 1e-10, [&] {
        return relative(op.apply_semigroup(0.3, op.apply_semigroup(0.2, v)), op.apply_semigroup(0.5, v));
    });
    b.bound("linear.semigroup_identity", 1e-10, [&] { return relative(op.apply_semigroup(0.0, v), v); });
    b.bound("linear.commutation", 1e-10, [&] {
        const Field x = seeded_bump(grid, n, 15);
        return l2_norm(op.apply_semigroup(0.4, proj.apply(x)) - proj.apply(op.apply_semigroup(0.4, x))) / l2_norm(x);
    });
    b.bound("linear.reconstruction", 1e-8, [&] { return op.reconstruction_error(); });
    b.bound("linear.decay_rate_vs_gap", 0.1, [&] { return decay_certificate(op, proj).beta_hat / op.gap() - 1.0; });
    b.bound("linear.range_solve_dual", 1e-8, [&] { return relative(solve_on_range(op, proj, v), solve_on_range_direct(op, proj, v)); });

    // Nonlinearities.
    const Field small = 0.05 * v;
    b.bound("nonlinear.R_II_dual_forms", 1e-10, [&] { return (R_II(ctx, small) - R_II_alt(ctx, small)).max_abs(); });
    b.bound("nonlinear.R_sigma_dual_forms", 1e-8, [&] { return (R_sigma(ctx, small) - R_sigma_raw(ctx, small)).max_abs(); });
    b.bound("nonlinear.drift_orthogonality", 1e-8, [&] {
        return inner_product(nonlinear_drift(ctx, small), ctx.psi()) / l2_norm(ctx.psi());
    });
    b.bound("nonlinear.noise_orthogonality", 1e-8, [&] {
        const Field xi = NoiseSampler(setup.noise(), cfg.seed, 0).sample_increment(0, 1.0);
        return inner_product(S_apply(ctx, small, xi), ctx.psi()) / l2_norm(ctx.psi());
    });
    b.bound("nonlinear.chi_low_at_front", 1e-12, [&] {
        return cutoffs(ctx, ctx.phi0()).chi_l - 1.0 / std::pow(grid.torus_volume(), grid.d - 1);
    });
    b.bound("nonlinear.R_I_second_order", 1e-2, [&] {
        const double r1 = l2_norm(R_I(ctx, 1e-2 * v)), r2 = l2_norm(R_I(ctx, 5e-3 * v));
        return r1 / r2 / 4.0 - 1.0;
    });

    // Expansion homogeneity on identical noise.
    const auto prop = setup.propagator(0.01);
    b.bound("expansion.homogeneity", 1e-10, [&] {
        const ExpansionEngine e1(ctx, *prop, cfg.r, cfg.k_star), e2(ctx.with_sigma(2.0 * sigma), *prop, cfg.r, cfg.k_star);
        const double delta = 0.05;
        ExpansionState s1 = e1.initial_state(delta, prepared.V_star), s2 = e2.initial_state(2.0 * delta, prepared.V_star);
        const NoiseSampler sampler(setup.noise(), cfg.seed, 99);
        for (std::uint64_t k = 0; k < 50; ++k) {
            const Field dW = sampler.sample_increment(k, 0.01);
            e1.step(s1, dW);
            e2.step(s2, dW);
        }
        double worst = 0.0;
        for (int j = 1; j <= 2 && j < cfg.r; ++j) {
            const Field expect = std::pow(2.0, j) * s1.Y[j - 1];
            worst = std::max(worst, relative(s2.Y[j - 1], expect));
        }
        return worst;
    });
    b.bound("expansion.neutral_orthogonality", 1e-8, [&] {
        const ExpansionEngine e(ctx, *prop, cfg.r, cfg.k_star);
        ExpansionState s = e.initial_state(0.05, prepared.V_star);
        const NoiseSampler sampler(setup.noise(), cfg.seed, 98);
        for (std::uint64_t k = 0; k < 50; ++k) e.step(s, sampler.sample_increment(k, 0.01));
        e.update_diagnostics(s);
        double worst = 0.0;
        for (double o : s.orthogonality) worst = std::max(worst, o);
        return worst;
    });

    // Simulator.
    PathOptions po;
    po.sigma = sigma;
    po.delta = 0.1;
    po.dt = 0.01;
    po.T = 2.0;
    po.r = cfg.r;
    po.k_star = cfg.k_star;
    po.k_c_sign = cfg.k_c_sign;
    po.V_star = prepared.V_star;
    po.record_every = 0;
    po.expansion = false;
    b.truth("simulator.determinism", [&] {
        const PathRecord a = run_path(setup, po, cfg.seed, 5), c = run_path(setup, po, cfg.seed, 5);
        return a.Gamma == c.Gamma && a.final_state.V.values() == c.final_state.V.values();
    });
    b.bound("simulator.neutral_conservation", 1e-4, [&] { return run_path(setup, po, cfg.seed, 6).sup_orthogonality; });
    b.bound("simulator.unperturbed_speed", 1e-12, [&] {
        PathOptions q = po;
        q.sigma = 0.0;
        q.delta = 0.0;
        const PathRecord r = run_path(setup, q, cfg.seed, 0);
        return (r.Gamma - profile.c0 * r.T) / std::abs(profile.c0 * r.T);
    });
    b.truth("ensemble.thread_independence", [&] {
        ExperimentConfig c = cfg;
        c.replicas = 4;
        c.T = 0.5;
        c.dt = 0.01;
        c.stability = false;
        c.expansion = false;
        c.sigma = sigma;
        c.delta = 0.0;
        PreparedConfig q = prepared;
        q.config = c;
        RunOptions ro;
        ro.write = false;
        ro.limit_check = false;
        ro.threads = 1;
        const std::string one = run_ensemble(q, ro).statistics.to_json().dump();
        ro.threads = 3;
        const std::string three = run_ensemble(q, ro).statistics.to_json().dump();
        return one == three;
    }, "statistics identical for 1 and 3 workers");

    // Limits.
    const CovarianceOperator cov = stationary_covariance(ctx, op, proj, true);
    b.bound("limits.lyapunov_route_difference", 1e-6, [&] { return cov.route_difference; });
    b.bound("limits.lyapunov_residual", 1e-8, [&] { return cov.lyapunov_residual; });
    b.bound("limits.trace_routes", 1e-6, [&] { return (cov.trace - cov.trace_smith) / cov.trace; });
    b.truth("limits.covariance_psd", [&] { return cov.min_eigenvalue >= -1e-10; });
    b.bound("limits.covariance_psi_pairing", 1e-8, [&] { return cov.psi_pairing; });
    if (grid.d == 1) {
        b.bound("limits.mean_limit_fd", 1e-6, [&] {
            const MeanLimit ml = mean_limit_Y2(ctx, op, proj, cov);
            return std::max(ml.fd_error, std::abs(inner_product(ml.mean, ctx.psi())) / l2_norm(ctx.psi()));
        });
    }
    b.truth("limits.c2_finite", [&] { return std::isfinite(wave_speed_c2(ctx, cov).c2); });

    // Stability bookkeeping.
    b.bound("stability.wilson", 1e-4, [&] { return wilson_interval(5, 10).lower - 0.236593; });
    b.bound("stability.monitor_limit", 0.01, [&] {
        const double beta = op.beta(), dt = 0.01;
        MonitorTracker t(beta, cfg.k_star, cfg.r, 0.1, dt);
        t.initialize(v, {});
        const double c = sobolev_norm_sq(v, cfg.k_star + 1.0);
        for (int k = 0; k < static_cast<int>(10.0 / beta / dt); ++k) t.update(v, {});
        return t.current().I / (c / (2.0 * beta)) - 1.0;
    });

    // Grid refinement.
    if (options.refinement) {
        try {
            const Coefficients coarse = coefficients(cfg, grid.N, sigma), fine = coefficients(cfg, 2 * grid.N, sigma);
            report.refinement = {{"c0", coarse.c0, fine.c0, fine.c0 - coarse.c0},
                                 {"beta_tw", coarse.beta_tw, fine.beta_tw, fine.beta_tw - coarse.beta_tw},
                                 {"c2", coarse.c2, fine.c2, fine.c2 - coarse.c2}};
            b.bound("refinement.c0", 1e-6, [&] { return report.refinement[0].delta; });
            b.bound("refinement.beta_tw", 1e-3, [&] { return report.refinement[1].delta / coarse.beta_tw; });
            b.bound("refinement.c2", 1e-3, [&] { return report.refinement[2].delta / std::max(std::abs(coarse.c2), 1e-12); });
        } catch (const std::exception& e) {
            b.truth("refinement", [] { return false; }, e.what());
        }
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace wavefreeze
