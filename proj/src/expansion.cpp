#include "wavefreeze/expansion.hpp"

#include <cmath>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

ConstantSources constant_sources(const FreezeContext& ctx) {
    const Field zero(ctx.grid(), ctx.n());
    ConstantSources src;
    src.rho_B = phase_data(ctx, zero);
    src.rho_N = R_II_plus_Upsilon(ctx, src.rho_B);
    return src;
}

Field apply_rho_B(const FreezeContext& ctx, const ConstantSources& src, const Field& xi) {
    return S_apply(ctx, src.rho_B, xi);
}

std::vector<std::vector<int>> ordered_compositions(int total, int parts) {
    std::vector<std::vector<int>> out;
    if (parts == 0) {
        if (total == 0) out.emplace_back();
        return out;
    }
    for (int first = 1; first <= total - (parts - 1); ++first)
        for (auto& rest : ordered_compositions(total - first, parts - 1)) {
            rest.insert(rest.begin(), first);
            out.push_back(std::move(rest));
        }
    return out;
}

namespace {

double factorial(int l) {
    double f = 1.0;
    for (int i = 2; i <= l; ++i) f *= i;
    return f;
}

std::vector<const Field*> directions_for(const ExpansionState& state, const std::vector<int>& comp) {
    std::vector<const Field*> dirs;
    for (int i : comp) dirs.push_back(&state.Y[i - 1]);
    return dirs;
}

}  // namespace

ExpansionEngine::ExpansionEngine(const FreezeContext& ctx, const Propagator& prop, int r, double k_star)
    : ctx_(ctx), prop_(&prop), r_(r), k_star_(k_star), src_(constant_sources(ctx)) {
    if (r_ < 3) throw ConfigError("expansion order must satisfy r >= 3");
    if (r_ > 5) throw ConfigError("expansion order r <= 5 is supported");
}

ExpansionState ExpansionEngine::initial_state(double delta, const Field& V_star) const {
    ExpansionState s;
    for (int j = 1; j < r_; ++j) s.Y.emplace_back(ctx_.grid(), ctx_.n());
    s.Y[0] = V_star;
    s.Y[0] *= delta;
    s.Y_tay = s.Y[0];
    update_diagnostics(s);
    return s;
}

Field ExpansionEngine::assemble_N(const ExpansionState& state, int j) const {
    if (j < 1 || j >= r_) throw ConfigError("expansion index out of range");
    if (static_cast<int>(state.Y.size()) < j - 1) throw ConfigError("missing lower-order expansion fields");
    const Field zero(ctx_.grid(), ctx_.n());
    Field out = zero;
    const FieldMap RI = [this](const Field& v) { return R_I(ctx_, v); };
    for (int l = 2; l <= j; ++l)
        for (const auto& comp : ordered_compositions(j, l))
            out.axpy(1.0 / factorial(l), directional_derivative(RI, directions_for(state, comp), zero));
    const double s2 = ctx_.sigma() * ctx_.sigma();
    if (s2 != 0.0 && j >= 2) {
        const FieldMap RU = [this](const Field& v) { return R_II_plus_Upsilon(ctx_, v); };
        for (int l = 0; l <= j - 2; ++l)
            for (const auto& comp : ordered_compositions(j - 2, l)) {
                if (l == 0)
                    out.axpy(s2, src_.rho_N);
                else
                    out.axpy(s2 / factorial(l), directional_derivative(RU, directions_for(state, comp), zero));
            }
    }
    return out;
}

Field ExpansionEngine::assemble_B(const ExpansionState& state, int j, const Field& dW) const {
    if (j < 1 || j >= r_) throw ConfigError("expansion index out of range");
    const Field zero(ctx_.grid(), ctx_.n());
    Field out = zero;
    const double sigma = ctx_.sigma();
    if (sigma == 0.0) return out;
    const FieldMap S = [this, &dW](const Field& v) { return S_apply(ctx_, v, dW); };
    for (int l = 0; l <= j - 1; ++l)
        for (const auto& comp : ordered_compositions(j - 1, l)) {
            if (l == 0)
                out.axpy(sigma, apply_rho_B(ctx_, src_, dW));
            else
                out.axpy(sigma / factorial(l), directional_derivative(S, directions_for(state, comp), zero));
        }
    return out;
}

void ExpansionEngine::step(ExpansionState& state, const Field& dW) const {
    const double dt = prop_->dt();
    std::vector<Field> incr;
    for (int j = 1; j < r_; ++j) {
        Field inc = state.Y[j - 1];
        inc.axpy(dt, assemble_N(state, j));
        inc += assemble_B(state, j, dW);
        incr.push_back(std::move(inc));
    }
    state.Y_tay = Field(ctx_.grid(), ctx_.n());
    for (int j = 1; j < r_; ++j) {
        state.Y[j - 1] = prop_->apply(incr[j - 1]);
        state.Y_tay += state.Y[j - 1];
    }
    state.t += dt;
    state.finite = state.Y_tay.finite();
}

void ExpansionEngine::update_diagnostics(ExpansionState& state) const {
    state.norms.clear();
    state.orthogonality.clear();
    for (int j = 1; j < r_; ++j) {
        const Field& y = state.Y[j - 1];
        state.norms.push_back(sobolev_norm(y, k_j(j)));
        state.orthogonality.push_back(std::abs(inner_product(y, ctx_.psi())) / std::max(1.0, l2_norm(y)));
    }
}

ExpansionEngine::Remainders ExpansionEngine::remainders(const ExpansionState& state) const {
    Remainders rem;
    const double s2 = ctx_.sigma() * ctx_.sigma();
    rem.N_rem = R_I(ctx_, state.Y_tay);
    if (s2 != 0.0) rem.N_rem.axpy(s2, R_II_plus_Upsilon(ctx_, state.Y_tay));
    for (int j = 1; j < r_; ++j) rem.N_rem -= assemble_N(state, j);
    const ExpansionState snapshot = state;
    rem.B_rem = [this, snapshot](const Field& xi) {
        Field out = S_apply(ctx_, snapshot.Y_tay, xi);
        out *= ctx_.sigma();
        for (int j = 1; j < r_; ++j) out -= assemble_B(snapshot, j, xi);
        return out;
    };
    return rem;
}

ConvolutionDiagnostics::ConvolutionDiagnostics(const LinearOperator& op, const Projector& proj,
                                               const Propagator& prop, double beta, double k)
    : proj_(&proj), prop_(&prop), beta_(beta), k_(k), E_(op.grid(), op.n()) {}

void ConvolutionDiagnostics::add_drift(const Field& source) { advance(prop_->dt() * proj_->complement(source)); }

void ConvolutionDiagnostics::add_noise(const Field& image) { advance(proj_->complement(image)); }

void ConvolutionDiagnostics::advance(Field increment) {
    const double dt = prop_->dt();
    increment += E_;
    E_ = prop_->apply(increment);
    t_ += dt;
    I_ = std::exp(-beta_ * dt) * I_ + dt * sobolev_norm_sq(E_, k_ + 1);
    sup_E_ = std::max(sup_E_, sobolev_norm(E_, k_));
    sup_I_ = std::max(sup_I_, I_);
}

ConvolutionSummary convolution_diagnostics(const LinearOperator& op, const Projector& proj, const Propagator& prop,
                                           const std::vector<Field>& samples, bool noise, double beta, double k) {
    ConvolutionDiagnostics diag(op, proj, prop, beta, k);
    for (const auto& s : samples) {
        if (noise)
            diag.add_noise(s);
        else
            diag.add_drift(s);
    }
    return {diag.sup_E(), diag.sup_I()};
}

}  // namespace wavefreeze
