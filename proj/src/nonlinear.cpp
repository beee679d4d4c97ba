#include "wavefreeze/nonlinear.hpp"

#include <algorithm>
#include <cmath>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double chi_high(double theta) { return 1.0 - smoothstep(theta - 2.0); }

double chi_low(double theta, double torus_volume) {
    const double lo = 0.25 * torus_volume, hi = 0.5 * torus_volume;
    if (theta <= lo) return lo;
    if (theta >= hi) return theta;
    const double s = smoothstep((theta - lo) / (hi - lo));
    return s * theta + (1.0 - s) * lo;
}

FreezeContext::FreezeContext(ModelPtr model, const WaveProfile& profile, const Grid& grid, NoisePtr noise,
                             double sigma, double k_c_sign)
    : model_(std::move(model)), profile_(profile), grid_(grid), noise_(std::move(noise)), sigma_(sigma),
      k_c_sign_(k_c_sign) {
    if (!(noise_->grid() == grid_)) throw ConfigError("noise grid differs from the simulation grid");
    if (noise_->m() != model_->m()) throw ConfigError("noise dimension differs from the model's m");
    if (!(sigma_ >= 0.0)) throw ConfigError("sigma must be non-negative");
    build();
}

void FreezeContext::build() {
    phi0_ = Field::broadcast(profile_.phi0, grid_);
    dphi0_ = Field::broadcast(profile_.dphi0[0], grid_);
    ddphi0_ = Field::broadcast(profile_.dphi0[1], grid_);
    psi_ = Field::broadcast(profile_.psi, grid_);
    dpsi_ = Field::broadcast(spectral_derivative(profile_.psi, 0, 1), grid_);
    ddpsi_ = Field::broadcast(spectral_derivative(profile_.psi, 0, 2), grid_);
    pair_dpsi_ = -inner_product(dphi0_, psi_);
    pair_ddpsi_ = inner_product(ddphi0_, psi_);
}

FreezeContext FreezeContext::with_sigma(double sigma) const {
    FreezeContext out = *this;
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
    out.sigma_ = sigma;
    return out;
}

FreezeContext FreezeContext::with_noise(NoisePtr noise) const {
    return FreezeContext(model_, profile_, grid_, std::move(noise), sigma_, k_c_sign_);
}

FreezeContext FreezeContext::with_psi(const Field& psi_line) const {
    FreezeContext out = *this;
    out.profile_.psi = psi_line;
    out.build();
    return out;
}

FreezeContext FreezeContext::translated(double gamma) const {
    FreezeContext out = *this;
    out.profile_ = profile_.translated(gamma);
    out.build();
    return out;
}

namespace {

void point_values(const Field& f, std::size_t p, double* out) {
    for (int c = 0; c < f.components(); ++c) out[c] = f(c, p);
}

Field pointwise_g(const FreezeContext& ctx, const Field& u) {
    const int n = ctx.n(), m = ctx.m();
    Field g(u.grid(), n * m);
    std::vector<double> up(n), gv(n * m);
    for (std::size_t p = 0; p < u.points(); ++p) {
        point_values(u, p, up.data());
        ctx.model().derivative(Which::g, 0, up.data(), nullptr, gv.data());
        for (int k = 0; k < n * m; ++k) g(k, p) = gv[k];
    }
    return g;
}

// (g^T w)_a = sum_i g_{ia} w_i
Field contract_transpose(const Field& g, const Field& w, int n, int m) {
    Field out(w.grid(), m);
    for (std::size_t p = 0; p < w.points(); ++p)
        for (int a = 0; a < m; ++a) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g(i * m + a, p) * w(i, p);
            out(a, p) = s;
        }
    return out;
}

// (g xi)_i = sum_a g_{ia} xi_a
Field contract(const Field& g, const Field& xi, int n, int m) {
    Field out(xi.grid(), n);
    for (std::size_t p = 0; p < xi.points(); ++p)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int a = 0; a < m; ++a) s += g(i * m + a, p) * xi(a, p);
            out(i, p) = s;
        }
    return out;
}

void check_perturbation(const FreezeContext& ctx, const Field& v) {
    if (v.components() != ctx.n() || !(v.grid() == ctx.grid()))
        throw ConfigError("perturbation field does not match the model and grid");
}

double pair_u_dpsi(const FreezeContext& ctx, const Field& v) {
    return ctx.pair_phi0_dpsi() + inner_product(v, ctx.dpsi());
}

double pair_u_ddpsi(const FreezeContext& ctx, const Field& v) {
    return ctx.pair_phi0_ddpsi() + inner_product(v, ctx.ddpsi());
}

Field K_C_from(const FreezeContext& ctx, const PhaseData& pd, Field* K_tilde = nullptr) {
    // K_tilde = chi_l chi_h Q g^T psi = -Q w_b / chi_h
    Field Kt(pd.w_b.grid(), ctx.m());
    if (pd.chi_h > 0.0) {
        Kt = pd.Q_w_b;
        Kt *= -1.0 / pd.chi_h;
    }
    Field K = contract(pd.g, Kt, ctx.n(), ctx.m());
    K *= ctx.k_c_sign() * pd.chi_h;
    if (K_tilde) *K_tilde = std::move(Kt);
    return K;
}

}  // namespace

PhaseData phase_data(const FreezeContext& ctx, const Field& v, bool noise_metric) {
    check_perturbation(ctx, v);
    PhaseData pd;
    pd.v = v;
    pd.u = ctx.phi0() + v;
    pd.du = ctx.dphi0() + spectral_derivative(v, 0, 1);
    pd.distance = l2_norm(v);
    pd.chi_h = chi_high(pd.distance);
    pd.theta_l = -pair_u_dpsi(ctx, v);
    pd.chi_l = 1.0 / chi_low(pd.theta_l, ctx.grid().torus_volume());
    pd.g = pointwise_g(ctx, pd.u);
    pd.gT_psi = contract_transpose(pd.g, ctx.psi(), ctx.n(), ctx.m());
    pd.w_b = pd.gT_psi;
    pd.w_b *= -pd.chi_h * pd.chi_h * pd.chi_l;
    if (!noise_metric) return pd;
    pd.Q_w_b = ctx.noise().apply_Q(pd.w_b);
    pd.nu_tilde = 0.5 * inner_product(pd.Q_w_b, pd.w_b);
    return pd;
}

CutoffPair cutoffs(const FreezeContext& ctx, const Field& u) {
    const Field v = u - ctx.phi0();
    return {chi_high(l2_norm(v)), 1.0 / chi_low(-pair_u_dpsi(ctx, v), ctx.grid().torus_volume())};
}

BCoefficient b_coeff(const FreezeContext& ctx, const Field& u) {
    const PhaseData pd = phase_data(ctx, u - ctx.phi0());
    return {pd.w_b, std::sqrt(2.0 * pd.nu_tilde)};
}

double b_apply(const FreezeContext& ctx, const Field& u, const Field& xi) {
    return inner_product(b_coeff(ctx, u).w_b, xi);
}

double nu_tilde(const FreezeContext& ctx, const Field& u) { return phase_data(ctx, u - ctx.phi0()).nu_tilde; }

KCPair K_C_pair(const FreezeContext& ctx, const Field& u) {
    const PhaseData pd = phase_data(ctx, u - ctx.phi0());
    KCPair out;
    out.K = K_C_from(ctx, pd, &out.K_tilde);
    return out;
}

Field N_f(const FreezeContext& ctx, const Field& v) {
    check_perturbation(ctx, v);
    const int n = ctx.n();
    Field out(v.grid(), n);
    std::vector<double> base(n), vp(n), up(n), f0(n), f1(n), fu(n);
    const double* dirs[1] = {vp.data()};
    for (std::size_t p = 0; p < v.points(); ++p) {
        point_values(ctx.phi0(), p, base.data());
        point_values(v, p, vp.data());
        for (int i = 0; i < n; ++i) up[i] = base[i] + vp[i];
        ctx.model().derivative(Which::f, 0, up.data(), nullptr, fu.data());
        ctx.model().derivative(Which::f, 0, base.data(), nullptr, f0.data());
        ctx.model().derivative(Which::f, 1, base.data(), dirs, f1.data());
        for (int i = 0; i < n; ++i) out(i, p) = (fu[i] - f0[i]) - f1[i];
    }
    return out;
}

double a_sigma_v(const FreezeContext& ctx, const PhaseData& pd) {
    const double s2 = ctx.sigma() * ctx.sigma();
    double bracket = inner_product(N_f(ctx, pd.v), ctx.psi());
    if (s2 != 0.0) {
        const Field K = K_C_from(ctx, pd);
        bracket += s2 * (-inner_product(K, ctx.dpsi()) + pd.nu_tilde * pair_u_ddpsi(ctx, pd.v));
    }
    return -pd.chi_l * bracket;
}

double a_sigma(const FreezeContext& ctx, const Field& u) { return a_sigma_v(ctx, phase_data(ctx, u - ctx.phi0())); }

double a_sigma_raw(const FreezeContext& ctx, const Field& u) {
    const Field v = u - ctx.phi0();
    const PhaseData pd = phase_data(ctx, v);
    const int n = ctx.n();
    Field fu(u.grid(), n);
    std::vector<double> up(n), fv(n);
    for (std::size_t p = 0; p < u.points(); ++p) {
        point_values(u, p, up.data());
        ctx.model().derivative(Which::f, 0, up.data(), nullptr, fv.data());
        for (int i = 0; i < n; ++i) fu(i, p) = fv[i];
    }
    const double s2 = ctx.sigma() * ctx.sigma();
    const Field K = K_C_from(ctx, pd);
    const double bracket = inner_product(fu, ctx.psi()) - ctx.profile().c0 * pair_u_dpsi(ctx, v) -
                           s2 * inner_product(K, ctx.dpsi()) + (1.0 + s2 * pd.nu_tilde) * pair_u_ddpsi(ctx, v);
    return -pd.chi_l * bracket;
}

double kappa_sigma(const FreezeContext& ctx, const Field& u) {
    return 1.0 + ctx.sigma() * ctx.sigma() * nu_tilde(ctx, u);
}

Field R_I(const FreezeContext& ctx, const Field& v) {
    check_perturbation(ctx, v);
    Field nf = N_f(ctx, v);
    const Field du = ctx.dphi0() + spectral_derivative(v, 0, 1);
    const double chi_l = 1.0 / chi_low(-pair_u_dpsi(ctx, v), ctx.grid().torus_volume());
    nf.axpy(-chi_l * inner_product(nf, ctx.psi()), du);
    return nf;
}

Field R_II(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    Field dK = spectral_derivative(K_C_from(ctx, pd), 0, 1);
    dK.axpy(-pd.chi_l * inner_product(dK, ctx.psi()), pd.du);
    return dK;
}

Field R_II_alt(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    const Field K = K_C_from(ctx, pd);
    Field dK = spectral_derivative(K, 0, 1);
    dK.axpy(pd.chi_l * inner_product(K, ctx.dpsi()), pd.du);
    return dK;
}

Field Upsilon_I(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    Field ddu = ctx.ddphi0() + spectral_derivative(v, 0, 2);
    ddu *= pd.nu_tilde;
    return ddu;
}

Field Upsilon_II(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    Field out = pd.du;
    out *= -pd.chi_l * pd.nu_tilde * pair_u_ddpsi(ctx, v);
    return out;
}

Field Upsilon(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    Field out = ctx.ddphi0() + spectral_derivative(v, 0, 2);
    out *= pd.nu_tilde;
    out.axpy(-pd.chi_l * pd.nu_tilde * pair_u_ddpsi(ctx, v), pd.du);
    return out;
}

Field linear_part(const FreezeContext& ctx, const Field& v) {
    check_perturbation(ctx, v);
    const int n = ctx.n();
    Field out = spectral_derivative(v, 0, 2);
    out.axpy(ctx.profile().c0, spectral_derivative(v, 0, 1));
    for (int a = 1; a < ctx.grid().d; ++a) out += spectral_derivative(v, a, 2);
    std::vector<double> base(n), vp(n), f1(n);
    const double* dirs[1] = {vp.data()};
    for (std::size_t p = 0; p < v.points(); ++p) {
        point_values(ctx.phi0(), p, base.data());
        point_values(v, p, vp.data());
        ctx.model().derivative(Which::f, 1, base.data(), dirs, f1.data());
        for (int i = 0; i < n; ++i) out(i, p) += f1[i];
    }
    return out;
}

Field R_II_plus_Upsilon(const FreezeContext& ctx, const PhaseData& pd) {
    Field dK = spectral_derivative(K_C_from(ctx, pd), 0, 1);
    dK.axpy(-pd.chi_l * inner_product(dK, ctx.psi()), pd.du);
    Field ups = ctx.ddphi0() + spectral_derivative(pd.v, 0, 2);
    ups *= pd.nu_tilde;
    ups.axpy(-pd.chi_l * pd.nu_tilde * pair_u_ddpsi(ctx, pd.v), pd.du);
    dK += ups;
    return dK;
}

Field R_II_plus_Upsilon(const FreezeContext& ctx, const Field& v) {
    return R_II_plus_Upsilon(ctx, phase_data(ctx, v));
}

Field nonlinear_drift(const FreezeContext& ctx, const PhaseData& pd) {
    Field out = R_I(ctx, pd.v);
    const double s2 = ctx.sigma() * ctx.sigma();
    if (s2 != 0.0) out.axpy(s2, R_II_plus_Upsilon(ctx, pd));
    return out;
}

Field nonlinear_drift(const FreezeContext& ctx, const Field& v) {
    if (ctx.sigma() == 0.0) return R_I(ctx, v);
    return nonlinear_drift(ctx, phase_data(ctx, v));
}

Field R_sigma(const FreezeContext& ctx, const Field& v) {
    Field out = linear_part(ctx, v);
    out += nonlinear_drift(ctx, v);
    return out;
}

Field R_sigma_raw(const FreezeContext& ctx, const Field& v) {
    const PhaseData pd = phase_data(ctx, v);
    const int n = ctx.n();
    const double s2 = ctx.sigma() * ctx.sigma();
    Field out = ctx.ddphi0() + spectral_derivative(v, 0, 2);
    out *= 1.0 + s2 * pd.nu_tilde;
    for (int a = 1; a < ctx.grid().d; ++a) out += spectral_derivative(v, a, 2);
    std::vector<double> up(n), fv(n);
    for (std::size_t p = 0; p < v.points(); ++p) {
        point_values(pd.u, p, up.data());
        ctx.model().derivative(Which::f, 0, up.data(), nullptr, fv.data());
        for (int i = 0; i < n; ++i) out(i, p) += fv[i];
    }
    out.axpy(ctx.profile().c0, pd.du);
    out.axpy(s2, spectral_derivative(K_C_from(ctx, pd), 0, 1));
    out.axpy(a_sigma_v(ctx, pd), pd.du);
    return out;
}

Field S_apply(const FreezeContext& ctx, const PhaseData& pd, const Field& xi) {
    if (xi.components() != ctx.m()) throw ConfigError("noise argument must have m components");
    Field out = contract(pd.g, xi, ctx.n(), ctx.m());
    out.axpy(inner_product(pd.w_b, xi), pd.du);
    return out;
}

Field S_apply(const FreezeContext& ctx, const Field& v, const Field& xi) {
    return S_apply(ctx, phase_data(ctx, v, false), xi);
}

double S_hs(const FreezeContext& ctx, const Field& v, double k) {
    const PhaseData pd = phase_data(ctx, v);
    const double t1 = hs_norm_multiplication_sq(ctx.noise(), pd.g, ctx.n(), k);
    const Field Wdu = apply_multiplier(pd.du, [k](const double* xi, const bool*) -> std::complex<double> {
        double s = 1.0;
        for (int a = 0; a < 3; ++a) s += xi[a] * xi[a];
        return std::pow(s, k);
    });
    const Field h = contract_transpose(pd.g, Wdu, ctx.n(), ctx.m());
    const double t2 = 2.0 * inner_product(h, pd.Q_w_b);
    const double t3 = sobolev_norm_sq(pd.du, k) * 2.0 * pd.nu_tilde;
    return std::sqrt(std::max(0.0, t1 + t2 + t3));
}

Field directional_derivative(const FieldMap& F, const std::vector<const Field*>& directions, const Field& zero,
                             double h) {
    const std::size_t l = directions.size();
    if (l == 0) return F(zero);
    std::vector<double> base_step(l);
    for (std::size_t i = 0; i < l; ++i) {
        const double nrm = l2_norm(*directions[i]);
        if (nrm == 0.0) {
            Field out = F(zero);
            out.set_zero();
            return out;
        }
        base_step[i] = h / nrm;
    }
    Field f_zero;
    bool have_zero = false;
    auto stencil = [&](double scale) {
        Field acc;
        double denom = 1.0;
        for (std::size_t i = 0; i < l; ++i) denom *= 2.0 * base_step[i] * scale;
        for (std::size_t mask = 0; mask < (std::size_t(1) << l); ++mask) {
            double sign = 1.0;
            std::vector<std::pair<const Field*, double>> coeff;
            for (std::size_t i = 0; i < l; ++i) {
                const bool neg = (mask >> i) & 1u;
                const double c = (neg ? -1.0 : 1.0) * base_step[i];
                auto it = std::find_if(coeff.begin(), coeff.end(),
                                       [&](const auto& e) { return e.first == directions[i]; });
                if (it == coeff.end())
                    coeff.emplace_back(directions[i], c);
                else
                    it->second += c;
                if (neg) sign = -sign;
            }
            Field point = zero;
            bool at_zero = true;
            for (const auto& [d, c] : coeff)
                if (c != 0.0) {
                    point.axpy(c * scale, *d);
                    at_zero = false;
                }
            if (at_zero && !have_zero) {
                f_zero = F(zero);
                have_zero = true;
            }
            Field val = at_zero ? f_zero : F(point);
            if (mask == 0)
                acc = (sign == 1.0 ? val : -1.0 * val);
            else
                acc.axpy(sign, val);
        }
        acc *= 1.0 / denom;
        return acc;
    };
    Field coarse = stencil(1.0);
    Field fine = stencil(0.5);
    // (4 fine - coarse) / 3
    fine *= 4.0;
    fine -= coarse;
    fine *= 1.0 / 3.0;
    return fine;
}

}  // namespace wavefreeze
