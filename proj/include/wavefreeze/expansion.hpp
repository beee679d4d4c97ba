#pragma once

#include <functional>
#include <vector>

#include "wavefreeze/field.hpp"
#include "wavefreeze/linear_flow.hpp"
#include "wavefreeze/nonlinear.hpp"

namespace wavefreeze {

// rho_N = R_II(0) + Upsilon(0); rho_B = S(0) represented by its phase data.
struct ConstantSources {
    Field rho_N;
    PhaseData rho_B;
};

ConstantSources constant_sources(const FreezeContext& ctx);
// rho_B[xi] = g(phi0) xi + b(phi0, 0)[xi] phi0'.
Field apply_rho_B(const FreezeContext& ctx, const ConstantSources& src, const Field& xi);

struct ExpansionState {
    double t = 0.0;
    std::vector<Field> Y;   // Y_1 ... Y_{r-1}
    Field Y_tay;
    std::vector<double> norms;          // ||Y_j||_{H^{k_j}}
    std::vector<double> orthogonality;  // |<Y_j, psi>| / max(1, ||Y_j||)
    bool finite = true;
};

// Ordered tuples (i_1, ..., i_parts) of positive integers summing to total.
std::vector<std::vector<int>> ordered_compositions(int total, int parts);

class ExpansionEngine {
public:
    // k_star sets the norm ladder k_j = k_star + r + 1 - j.
    ExpansionEngine(const FreezeContext& ctx, const Propagator& prop, int r, double k_star);

    const FreezeContext& context() const { return ctx_; }
    const ConstantSources& sources() const { return src_; }
    int r() const { return r_; }
    double k_j(int j) const { return k_star_ + r_ + 1 - j; }

    // Y_1(0) = delta V_star, Y_j(0) = 0 otherwise.
    ExpansionState initial_state(double delta, const Field& V_star) const;

    // Ñ_j evaluated on the fields of state (1 <= j <= r - 1).
    Field assemble_N(const ExpansionState& state, int j) const;
    // B̃_j applied to a noise increment.
    Field assemble_B(const ExpansionState& state, int j, const Field& dW) const;

    // Y_j <- S(dt)[Y_j + dt Ñ_j + B̃_j(dW)] for all j from the step-start fields.
    void step(ExpansionState& state, const Field& dW) const;
    void update_diagnostics(ExpansionState& state) const;

    struct Remainders {
        Field N_rem;
        std::function<Field(const Field&)> B_rem;
    };
    Remainders remainders(const ExpansionState& state) const;

private:
    FreezeContext ctx_;
    const Propagator* prop_;
    int r_;
    double k_star_;
    ConstantSources src_;
};

// Running convolution E(t) = sum S(t - s) P^perp (source ds or dW) with the
// weighted energy I(t + dt) = e^{-beta dt} I(t) + dt ||E||^2_{H^{k+1}}.
class ConvolutionDiagnostics {
public:
    ConvolutionDiagnostics(const LinearOperator& op, const Projector& proj, const Propagator& prop, double beta,
                           double k);

    void add_drift(const Field& source);
    void add_noise(const Field& image);

    const Field& E() const { return E_; }
    double I() const { return I_; }
    double sup_E() const { return sup_E_; }
    double sup_I() const { return sup_I_; }
    double t() const { return t_; }

private:
    void advance(Field increment);

    const Projector* proj_;
    const Propagator* prop_;
    double beta_, k_;
    Field E_;
    double I_ = 0.0, sup_E_ = 0.0, sup_I_ = 0.0, t_ = 0.0;
};

struct ConvolutionSummary {
    double sup_E;
    double sup_I;
};

// Batch form over a stored path; noise samples are B applied to dW.
ConvolutionSummary convolution_diagnostics(const LinearOperator& op, const Projector& proj, const Propagator& prop,
                                           const std::vector<Field>& samples, bool noise, double beta, double k);

}  // namespace wavefreeze
