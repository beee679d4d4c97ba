#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wavefreeze/field.hpp"
#include "wavefreeze/model.hpp"
#include "wavefreeze/noise.hpp"
#include "wavefreeze/wave.hpp"

namespace wavefreeze {

// Smooth partition s(t) = e(t) / (e(t) + e(1 - t)), e(t) = exp(-1/t) for t > 0.
double smoothstep(double t);
// Equals 1 below 2 and 0 above 3.
double chi_high(double theta);
// Equals a below a and theta above b, where [a, b] = [1/4, 1/2] |T|^{d-1}.
double chi_low(double theta, double torus_volume);

// Frozen-frame evaluation data: model, profile, noise and sigma. Profile
// fields are broadcast onto the full grid once.
class FreezeContext {
public:
    FreezeContext(ModelPtr model, const WaveProfile& profile, const Grid& grid, NoisePtr noise, double sigma,
                  double k_c_sign = -1.0);

    const ReactionModel& model() const { return *model_; }
    const ModelPtr& model_ptr() const { return model_; }
    const WaveProfile& profile() const { return profile_; }
    const Grid& grid() const { return grid_; }
    const NoiseModel& noise() const { return *noise_; }
    const NoisePtr& noise_ptr() const { return noise_; }
    double sigma() const { return sigma_; }
    double k_c_sign() const { return k_c_sign_; }
    int n() const { return model_->n(); }
    int m() const { return model_->m(); }

    const Field& phi0() const { return phi0_; }
    const Field& dphi0() const { return dphi0_; }
    const Field& ddphi0() const { return ddphi0_; }
    const Field& psi() const { return psi_; }
    const Field& dpsi() const { return dpsi_; }
    const Field& ddpsi() const { return ddpsi_; }
    // <phi0, psi'> and <phi0, psi''> through the stored derivatives of phi0.
    double pair_phi0_dpsi() const { return pair_dpsi_; }
    double pair_phi0_ddpsi() const { return pair_ddpsi_; }

    FreezeContext with_sigma(double sigma) const;
    FreezeContext with_noise(NoisePtr noise) const;
    FreezeContext with_psi(const Field& psi_line) const;
    // Context whose profile data are shifted by gamma.
    FreezeContext translated(double gamma) const;

private:
    void build();

    ModelPtr model_;
    WaveProfile profile_;
    Grid grid_;
    NoisePtr noise_;
    double sigma_, k_c_sign_;
    Field phi0_, dphi0_, ddphi0_, psi_, dpsi_, ddpsi_;
    double pair_dpsi_ = 0.0, pair_ddpsi_ = 0.0;
};

struct CutoffPair {
    double chi_h;
    double chi_l;
};

// Shared quantities at u = phi0 + v.
struct PhaseData {
    Field v;
    Field u;        // n components
    Field du;       // d/dx u
    Field g;        // n*m components, (i, a) at i*m + a
    Field gT_psi;   // m components
    Field w_b;      // b[xi] = <xi, w_b>
    Field Q_w_b;
    double distance = 0.0;
    double theta_l = 0.0;
    double chi_h = 1.0;
    double chi_l = 1.0;
    double nu_tilde = 0.0;
};

// noise_metric = false skips Q_w_b and nu_tilde.
PhaseData phase_data(const FreezeContext& ctx, const Field& v, bool noise_metric = true);

CutoffPair cutoffs(const FreezeContext& ctx, const Field& u);

struct BCoefficient {
    Field w_b;
    double hs_norm;
};
BCoefficient b_coeff(const FreezeContext& ctx, const Field& u);
double b_apply(const FreezeContext& ctx, const Field& u, const Field& xi);
double nu_tilde(const FreezeContext& ctx, const Field& u);

struct KCPair {
    Field K_tilde;  // m components
    Field K;        // n components
};
KCPair K_C_pair(const FreezeContext& ctx, const Field& u);

double a_sigma(const FreezeContext& ctx, const Field& u);
double a_sigma_raw(const FreezeContext& ctx, const Field& u);
double a_sigma_v(const FreezeContext& ctx, const PhaseData& pd);
double kappa_sigma(const FreezeContext& ctx, const Field& u);

Field N_f(const FreezeContext& ctx, const Field& v);
Field R_I(const FreezeContext& ctx, const Field& v);
Field R_II(const FreezeContext& ctx, const Field& v);
// Variant written with <K_C, psi'> instead of <d/dx K_C, psi>.
Field R_II_alt(const FreezeContext& ctx, const Field& v);
Field Upsilon_I(const FreezeContext& ctx, const Field& v);
Field Upsilon_II(const FreezeContext& ctx, const Field& v);
Field Upsilon(const FreezeContext& ctx, const Field& v);
// L_tw v + Laplacian_perp v evaluated spectrally.
Field linear_part(const FreezeContext& ctx, const Field& v);
Field R_sigma(const FreezeContext& ctx, const Field& v);
// Direct evaluation from the unreduced definition.
Field R_sigma_raw(const FreezeContext& ctx, const Field& v);
Field R_II_plus_Upsilon(const FreezeContext& ctx, const Field& v);
Field R_II_plus_Upsilon(const FreezeContext& ctx, const PhaseData& pd);
// R_I + sigma^2 (R_II + Upsilon): the nonlinear drift of the frozen SPDE.
Field nonlinear_drift(const FreezeContext& ctx, const Field& v);
Field nonlinear_drift(const FreezeContext& ctx, const PhaseData& pd);

Field S_apply(const FreezeContext& ctx, const Field& v, const Field& xi);
Field S_apply(const FreezeContext& ctx, const PhaseData& pd, const Field& xi);
double S_hs(const FreezeContext& ctx, const Field& v, double k);

using FieldMap = std::function<Field(const Field&)>;

// D^l F(0)[d_1, ..., d_l] by nested central differences with steps
// h / ||d_i||, refined by one Richardson extrapolation.
Field directional_derivative(const FieldMap& F, const std::vector<const Field*>& directions, const Field& zero,
                             double h = 1e-3);

}  // namespace wavefreeze
