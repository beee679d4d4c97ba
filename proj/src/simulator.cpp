#include "wavefreeze/simulator.hpp"

#include <cmath>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/io.hpp"

namespace wavefreeze {

SimulationSetup::SimulationSetup(ModelPtr model, const Grid& grid, double q0, double ell,
                                 const ProfileOptions& options)
    : model_(std::move(model)), grid_(grid) {
    profile_ = compute_wave(*model_, grid_, {}, options);
    noise_ = std::make_shared<NoiseModel>(grid_, model_->m(), q0, ell);
    op_ = std::make_shared<LinearOperator>(*model_, profile_, grid_);
    proj_ = std::make_shared<Projector>(profile_, grid_);
}

FreezeContext SimulationSetup::context(double sigma, double k_c_sign) const {
    return FreezeContext(model_, profile_, grid_, noise_, sigma, k_c_sign);
}

std::shared_ptr<const Propagator> SimulationSetup::propagator(double dt) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = props_.find(dt);
    if (it != props_.end()) return it->second;
    auto p = std::make_shared<const Propagator>(*op_, dt);
    props_.emplace(dt, p);
    return p;
}

StepInfo step_spde(const FreezeContext& ctx, const Propagator& prop, SimulationState& state, const Field& dW) {
    const double dt = prop.dt(), sigma = ctx.sigma();
    const PhaseData pd = phase_data(ctx, state.V);
    StepInfo info;
    info.a_sigma = a_sigma_v(ctx, pd);
    info.b_dW = inner_product(pd.w_b, dW);
    info.chi_h = pd.chi_h;
    info.chi_l = pd.chi_l;
    info.kappa = 1.0 + sigma * sigma * pd.nu_tilde;
    Field inc = state.V;
    inc.axpy(dt, nonlinear_drift(ctx, pd));
    if (sigma != 0.0) inc.axpy(sigma, S_apply(ctx, pd, dW));
    state.V = prop.apply(inc);
    state.Gamma += (ctx.profile().c0 + info.a_sigma) * dt + sigma * info.b_dW;
    state.t += dt;
    return info;
}

const char* to_string(PathStatus status) {
    switch (status) {
        case PathStatus::completed: return "completed";
        case PathStatus::stopped: return "stopped";
        case PathStatus::blown_up: return "blown_up";
    }
    return "unknown";
}

PathOutcome PathRecord::outcome() const {
    PathOutcome o;
    o.completed = status != PathStatus::blown_up && t_end >= T - 1e-9;
    o.exceeded = exceeded;
    o.t_st = t_st;
    o.T = T;
    o.max_N_full = max_N_full;
    o.sup_Z_sq = sup_Z_sq;
    o.sup_Y_sq = sup_Y_sq;
    return o;
}

SpeedSample PathRecord::speed(double c0) const {
    if (status == PathStatus::blown_up) throw NumericalError("observed speed on a blown-up path");
    return observed_speed(Gamma_half, Gamma, T, c0, a_integral_half, martingale_half, t_end + 1e-9);
}

namespace {

bool out_of_range(const Field& u, const WaveProfile& profile, double tol) {
    for (int c = 0; c < u.components(); ++c) {
        const double lo = std::min(profile.ref_minus[c], profile.ref_plus[c]);
        const double hi = std::max(profile.ref_minus[c], profile.ref_plus[c]);
        const double pad = tol * std::max(hi - lo, 1.0);
        const double* p = u.component(c);
        for (std::size_t i = 0; i < u.points(); ++i)
            if (p[i] < lo - pad || p[i] > hi + pad) return true;
    }
    return false;
}

}  // namespace

PathRecord run_path(const SimulationSetup& setup, const PathOptions& o, std::uint64_t seed, std::uint64_t stream) {
    if (!(o.dt > 0.0) || !(o.T > 0.0)) throw ConfigError("dt and T must be positive");
    if (o.r < 3 || o.r > 5) throw ConfigError("expansion order r must lie in 3..5");
    const FreezeContext ctx = setup.context(o.sigma, o.k_c_sign);
    const auto prop = setup.propagator(o.dt);
    const std::size_t steps = static_cast<std::size_t>(std::llround(o.T / o.dt));
    const std::size_t half = steps / 2;
    const int n = setup.model()->n();
    const double beta = o.beta > 0.0 ? o.beta : setup.op().beta();

    Field V_star = o.V_star.size() ? o.V_star : Field(setup.grid(), n);
    if (V_star.components() != n || !(V_star.grid() == setup.grid()))
        throw ConfigError("V_star does not match the model and grid");

    PathRecord rec;
    rec.seed = seed;
    rec.stream = stream;
    rec.T = steps * o.dt;
    rec.t_st = rec.T;
    rec.half_time = half * o.dt;

    SimulationState state;
    state.V = V_star;
    state.V *= o.delta;

    std::unique_ptr<ExpansionEngine> engine;
    ExpansionState ex;
    if (o.expansion) {
        engine = std::make_unique<ExpansionEngine>(ctx, *prop, o.r, o.k_star);
        ex = engine->initial_state(o.delta, V_star);
    }
    auto Y_norms_sq = [&]() {
        std::vector<double> out;
        if (!engine) return out;
        for (int j = 1; j < o.r; ++j) out.push_back(sobolev_norm_sq(ex.Y[j - 1], engine->k_j(j)));
        return out;
    };
    Field Z = engine ? state.V - ex.Y_tay : state.V;

    MonitorTracker tracker(beta, o.k_star, o.r, o.alpha, o.dt);
    std::vector<double> ys = Y_norms_sq();
    tracker.initialize(Z, ys);

    rec.header = {"t", "Gamma", "a_sigma", "V_L2", "Z_Hk"};
    for (int j = 1; engine && j < o.r; ++j) rec.header.push_back("Y" + std::to_string(j) + "_Hk");
    for (const char* h : {"N_res", "N_full", "chi_h", "kappa", "tail_mass", "orthogonality"}) rec.header.push_back(h);

    const double psi_scale = l2_norm(ctx.psi());
    StepInfo info;
    auto account = [&](const Monitors& m) {
        rec.max_N_full = std::max(rec.max_N_full, m.N_full);
        const double z2 = sobolev_norm_sq(Z, o.k_star);
        rec.sup_Z_sq = std::max(rec.sup_Z_sq, z2);
        if (rec.sup_Y_sq.size() < ys.size()) rec.sup_Y_sq.assign(ys.size(), 0.0);
        for (std::size_t j = 0; j < ys.size(); ++j) rec.sup_Y_sq[j] = std::max(rec.sup_Y_sq[j], ys[j]);
        const double orth = std::abs(inner_product(state.V, ctx.psi())) / psi_scale;
        rec.sup_orthogonality = std::max(rec.sup_orthogonality, orth);
        if (m.N_full > o.threshold && !rec.exceeded) {
            rec.exceeded = true;
            rec.t_st = state.t;
        }
        return std::make_pair(z2, orth);
    };
    auto record = [&](const Monitors& m, double z2, double orth) {
        const double tm = tail_mass(state.V);
        rec.max_tail_mass = std::max(rec.max_tail_mass, tm);
        std::vector<double> row = {state.t, state.Gamma, info.a_sigma, l2_norm(state.V), std::sqrt(z2)};
        for (double y : ys) row.push_back(std::sqrt(y));
        for (double v : {m.N_res, m.N_full, info.chi_h, info.kappa, tm, orth}) row.push_back(v);
        rec.rows.push_back(std::move(row));
    };
    {
        const PhaseData pd0 = phase_data(ctx, state.V);
        info.a_sigma = a_sigma_v(ctx, pd0);
        info.chi_h = pd0.chi_h;
        info.kappa = 1.0 + o.sigma * o.sigma * pd0.nu_tilde;
        const auto [z2, orth] = account(tracker.current());
        if (o.record_every > 0) record(tracker.current(), z2, orth);
    }

    const NoiseSampler sampler(setup.noise(), seed, stream);
    Field dW(setup.grid(), setup.model()->m());
    for (std::size_t k = 0; k < steps; ++k) {
        if (o.stop_on_threshold && rec.exceeded) {
            rec.status = PathStatus::stopped;
            break;
        }
        if (o.sigma != 0.0) dW = sampler.sample_increment(k, o.dt);
        if (k == half) rec.Gamma_half = state.Gamma;
        try {
            if (engine) engine->step(ex, dW);
            info = step_spde(ctx, *prop, state, dW);
        } catch (const NumericalError&) {
            rec.status = PathStatus::blown_up;
            break;
        }
        if (k >= half) {
            rec.a_integral_half += info.a_sigma * o.dt;
            rec.martingale_half += info.b_dW;
        }
        if (!state.V.finite() || state.V.max_abs() > o.blowup_bound || !std::isfinite(state.Gamma)) {
            rec.status = PathStatus::blown_up;
            break;
        }
        state.t = (k + 1) * o.dt;
        ex.t = state.t;
        if (info.chi_h < 1.0) ++rec.cutoff_steps;
        if (out_of_range(ctx.phi0() + state.V, setup.profile(), o.range_tolerance)) ++rec.range_flags;

        Z = state.V;
        if (engine) Z -= ex.Y_tay;
        ys = Y_norms_sq();
        const Monitors& m = tracker.update(Z, ys);
        const auto [z2, orth] = account(m);
        const bool last = k + 1 == steps;
        if (o.record_every > 0 && ((k + 1) % o.record_every == 0 || last)) record(m, z2, orth);
        if (o.snapshot_every > 0 && !o.snapshot_prefix.empty() && ((k + 1) % o.snapshot_every == 0 || last))
            write_snapshot(o.snapshot_prefix + "_" + std::to_string(k + 1) + ".bin", state.V, state.t, seed);
        if (o.observer) o.observer(StepView{k + 1, state, engine ? &ex : nullptr, Z, m, info});
    }
    if (rec.status == PathStatus::completed && o.stop_on_threshold && rec.exceeded)
        rec.status = PathStatus::stopped;
    rec.t_end = state.t;
    rec.event = rec.status != PathStatus::blown_up && rec.t_end >= rec.T - 1e-9 && !rec.exceeded;
    rec.Gamma = state.Gamma;
    if (engine) engine->update_diagnostics(ex);
    rec.final_state = std::move(state);
    rec.expansion = std::move(ex);
    rec.Z = std::move(Z);
    return rec;
}

}  // namespace wavefreeze
