#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "wavefreeze/expansion.hpp"
#include "wavefreeze/field.hpp"
#include "wavefreeze/linear_flow.hpp"
#include "wavefreeze/model.hpp"
#include "wavefreeze/noise.hpp"
#include "wavefreeze/nonlinear.hpp"
#include "wavefreeze/stability.hpp"
#include "wavefreeze/wave.hpp"

namespace wavefreeze {

// Model, wave, noise and linear data shared by every path of a run.
class SimulationSetup {
public:
    SimulationSetup(ModelPtr model, const Grid& grid, double q0, double ell, const ProfileOptions& options = {});

    const ModelPtr& model() const { return model_; }
    const Grid& grid() const { return grid_; }
    const WaveProfile& profile() const { return profile_; }
    const NoisePtr& noise() const { return noise_; }
    const LinearOperator& op() const { return *op_; }
    const Projector& proj() const { return *proj_; }
    FreezeContext context(double sigma, double k_c_sign = -1.0) const;
    // Cached S(dt), safe to call from several threads.
    std::shared_ptr<const Propagator> propagator(double dt) const;

private:
    ModelPtr model_;
    Grid grid_;
    WaveProfile profile_;
    NoisePtr noise_;
    std::shared_ptr<const LinearOperator> op_;
    std::shared_ptr<const Projector> proj_;
    mutable std::mutex mutex_;
    mutable std::map<double, std::shared_ptr<const Propagator>> props_;
};

struct SimulationState {
    double t = 0.0;
    Field V;
    double Gamma = 0.0;
};

struct StepInfo {
    double a_sigma = 0.0;
    double b_dW = 0.0;  // b[dW] at the step start
    double chi_h = 1.0;
    double chi_l = 1.0;
    double kappa = 1.0;
};

// V <- S(dt)[V + dt (R_I + sigma^2 (R_II + Upsilon))(V) + sigma S(V) dW],
// Gamma <- Gamma + (c0 + a_sigma(V)) dt + sigma b(V)[dW].
StepInfo step_spde(const FreezeContext& ctx, const Propagator& prop, SimulationState& state, const Field& dW);

enum class PathStatus { completed, stopped, blown_up };
const char* to_string(PathStatus status);

struct StepView {
    std::size_t step;
    const SimulationState& state;
    const ExpansionState* expansion;
    const Field& Z;
    const Monitors& monitors;
    const StepInfo& info;
};

struct PathOptions {
    double sigma = 0.0;
    double delta = 0.0;
    double dt = 0.01;
    double T = 10.0;
    int r = 3;
    double k_star = 1.0;
    double k_c_sign = -1.0;
    Field V_star;  // empty means zero
    bool expansion = true;
    bool stop_on_threshold = true;
    double threshold = std::numeric_limits<double>::infinity();
    double alpha = 0.0;
    double beta = 0.0;  // monitor rate; zero selects the operator value
    int record_every = 10;
    int snapshot_every = 0;
    std::string snapshot_prefix;
    double blowup_bound = 1e6;
    double range_tolerance = 0.5;
    std::function<void(const StepView&)> observer;
};

struct PathRecord {
    PathStatus status = PathStatus::completed;
    std::uint64_t seed = 0, stream = 0;
    double T = 0.0;
    double t_end = 0.0;
    double t_st = 0.0;  // first threshold exceedance, T when none
    bool exceeded = false;  // N_full crossed the threshold
    bool event = false;
    double Gamma = 0.0;
    double Gamma_half = 0.0;
    double half_time = 0.0;
    double a_integral_half = 0.0;   // integral of a_sigma over [T/2, T]
    double martingale_half = 0.0;   // sum of b[dW] over [T/2, T]
    double max_N_full = 0.0;
    double sup_Z_sq = 0.0;
    std::vector<double> sup_Y_sq;
    double sup_orthogonality = 0.0;
    std::size_t range_flags = 0;
    std::size_t cutoff_steps = 0;
    double max_tail_mass = 0.0;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    SimulationState final_state;
    ExpansionState expansion;
    Field Z;

    PathOutcome outcome() const;
    SpeedSample speed(double c0) const;
};

// Runs one path to the horizon, the stopping time or blow-up.
PathRecord run_path(const SimulationSetup& setup, const PathOptions& options, std::uint64_t seed,
                    std::uint64_t stream);

}  // namespace wavefreeze
