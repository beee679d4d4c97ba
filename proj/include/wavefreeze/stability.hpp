#pragma once

#include <optional>
#include <vector>

#include "wavefreeze/field.hpp"

namespace wavefreeze {

// theta_* = r / (2 (2r - 1)).
double theta_star(int r);
// eta(sigma; theta) = 2^{1-r} sigma^{2(1-theta)}.
double eta_default(double sigma, int r, double theta);
// T(sigma; theta) = min(max(floor(exp(mu sigma^{-2 theta / r} / 2)), T_min), T_cap).
double horizon(double sigma, double theta, double mu, int r, double T_min, double T_cap);
// alpha = sqrt(delta^2 + sigma^2 ln T).
double alpha_of(double delta, double sigma, double T);

struct StabilityConfig {
    double eta = 0.0;
    double theta = 0.0;
    double mu = 0.1;
    double T_cap = 100.0;
    double T_min = 3.0;
    int r = 3;
    double sigma = 0.0;
    double delta = 0.0;
    double beta = 0.0;
    double k_star = 1.0;

    double T() const { return horizon(sigma, theta, mu, r, T_min, T_cap); }
    double alpha() const { return alpha_of(delta, sigma, T()); }
    double threshold() const;
    // Raises ConfigError unless delta^2 < mu eta.
    void validate() const;
};

struct Monitors {
    double N_res = 0.0;
    double N_full = 0.0;
    double I = 0.0;
};

// N_res = ||Z||^2_{H^{k*}} + I with I <- e^{-2 beta dt} I + dt ||Z||^2_{H^{k*+1}};
// N_full = sum_j alpha^{2(r-j)} ||Y_j||^2_{H^{k_j}} + N_res.
class MonitorTracker {
public:
    MonitorTracker(double beta, double k_star, int r, double alpha, double dt);

    // Value at t = 0 without advancing the integral.
    const Monitors& initialize(const Field& Z, const std::vector<double>& Y_norms_sq);
    const Monitors& update(const Field& Z, const std::vector<double>& Y_norms_sq);
    const Monitors& current() const { return m_; }

private:
    double full(const std::vector<double>& Y_norms_sq) const;

    double beta_, k_star_, alpha_, dt_;
    int r_;
    Monitors m_;
};

// First grid time with N_full > eta alpha^{2(r-1)}, else the horizon T.
double stopping_time(const std::vector<double>& times, const std::vector<double>& N_full, double eta, double alpha,
                     int r, double T);

struct WilsonInterval {
    double lower;
    double upper;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct PathOutcome {
    bool completed = false;  // reached the horizon without blow-up
    bool exceeded = false;
    double t_st = 0.0;
    double T = 0.0;
    double max_N_full = 0.0;
    double sup_Z_sq = 0.0;
    std::vector<double> sup_Y_sq;
};

struct StabilityReport {
    std::vector<bool> event;
    std::vector<double> t_st;
    std::vector<double> max_N_full;
    std::vector<bool> pathwise_bounds;
    double p_stb = 0.0;
    WilsonInterval interval{0.0, 1.0};
    std::size_t positives = 0;
};

// Event {t_st = T} per path and the Wilson estimate of its probability.
StabilityReport stability_event(const std::vector<PathOutcome>& paths, const StabilityConfig& config);

struct SpeedSample {
    double C_obs;
    double c0;
    double a_average;   // time average of a_sigma over [T/2, T]
    double martingale;  // (2/T) sum b[dW] over [T/2, T]
};

// C_obs = (2/T)[Gamma(T) - Gamma(T/2)] with its decomposition c0 + a_average + sigma * martingale.
SpeedSample observed_speed(double Gamma_half, double Gamma_T, double T, double c0, double a_integral_half,
                           double martingale_sum_half, double t_reached);

struct ConditionalEstimate {
    double mean;
    double standard_error;
    double correction_bound;
    double p;
    std::size_t positives;
};

// Mean over event-positive samples and the bound p^{-1} (E|phi|^2)^{1/2} (p(1-p))^{1/2}.
ConditionalEstimate conditional_expectation(const std::vector<double>& values, const std::vector<bool>& flags,
                                            std::size_t min_positives = 30);

// Largest mu with 1 - p <= 2 T exp(-mu eta^{1/r} / sigma^{2/r}) at every grid point; +inf when p = 1 throughout.
double fit_exceedance_mu(const std::vector<double>& sigma, const std::vector<double>& p_stb,
                         const std::vector<double>& eta, const std::vector<double>& T, int r);

}  // namespace wavefreeze
