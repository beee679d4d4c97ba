#include "wavefreeze/stability.hpp"

#include <cmath>
#include <limits>

#include "wavefreeze/errors.hpp"

namespace wavefreeze {

double theta_star(int r) { return r / (2.0 * (2.0 * r - 1.0)); }

double eta_default(double sigma, int r, double theta) {
    return std::pow(2.0, 1.0 - r) * std::pow(sigma, 2.0 * (1.0 - theta));
}

double horizon(double sigma, double theta, double mu, int r, double T_min, double T_cap) {
    double T = T_cap;
    if (sigma > 0.0) {
        const double expo = 0.5 * mu * std::pow(sigma, -2.0 * theta / r);
        if (expo < std::log(T_cap) + 1.0) T = std::floor(std::exp(expo));
    }
    return std::min(std::max(T, T_min), T_cap);
}

double alpha_of(double delta, double sigma, double T) {
    return std::sqrt(delta * delta + sigma * sigma * std::log(T));
}

double StabilityConfig::threshold() const { return eta * std::pow(alpha(), 2.0 * (r - 1)); }

void StabilityConfig::validate() const {
    if (!(eta > 0.0)) throw ConfigError("stability threshold eta must be positive");
    if (!(theta >= 0.0 && theta < 0.5)) throw ConfigError("theta must lie in [0, 1/2)");
    if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("mu must lie in (0, 1)");
    if (!(delta * delta < mu * eta)) throw ConfigError("stability hypothesis delta^2 < mu eta violated");
}

MonitorTracker::MonitorTracker(double beta, double k_star, int r, double alpha, double dt)
    : beta_(beta), k_star_(k_star), alpha_(alpha), dt_(dt), r_(r) {}

double MonitorTracker::full(const std::vector<double>& Y_norms_sq) const {
    double s = m_.N_res;
    for (std::size_t j = 1; j <= Y_norms_sq.size(); ++j)
        s += std::pow(alpha_, 2.0 * (r_ - static_cast<int>(j))) * Y_norms_sq[j - 1];
    return s;
}

const Monitors& MonitorTracker::initialize(const Field& Z, const std::vector<double>& Y_norms_sq) {
    m_.I = 0.0;
    m_.N_res = sobolev_norm_sq(Z, k_star_);
    m_.N_full = full(Y_norms_sq);
    return m_;
}

const Monitors& MonitorTracker::update(const Field& Z, const std::vector<double>& Y_norms_sq) {
    const std::vector<double> z = sobolev_norms_sq(Z, {k_star_, k_star_ + 1.0});
    m_.I = std::exp(-2.0 * beta_ * dt_) * m_.I + dt_ * z[1];
    m_.N_res = z[0] + m_.I;
    m_.N_full = full(Y_norms_sq);
    return m_;
}

double stopping_time(const std::vector<double>& times, const std::vector<double>& N_full, double eta, double alpha,
                     int r, double T) {
    const double thr = eta * std::pow(alpha, 2.0 * (r - 1));
    for (std::size_t i = 0; i < times.size() && i < N_full.size(); ++i)
        if (N_full[i] > thr) return times[i];
    return T;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials), p = successes / n, z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

StabilityReport stability_event(const std::vector<PathOutcome>& paths, const StabilityConfig& config) {
    std::size_t completed = 0;
    for (const auto& p : paths) completed += p.completed;
    if (paths.size() < 2) throw ConfigError("stability event needs at least two paths");
    StabilityReport rep;
    const double sigma = config.sigma;
    for (const auto& p : paths) {
        const bool ev = p.completed && !p.exceeded;
        rep.event.push_back(ev);
        rep.t_st.push_back(p.t_st);
        rep.max_N_full.push_back(p.max_N_full);
        bool ok = true;
        if (ev && sigma > 0.0) {
            const int r = config.r;
            ok = p.sup_Z_sq <= std::pow(sigma, 2.0 * r - 1.0);
            for (std::size_t j = 1; j <= p.sup_Y_sq.size(); ++j)
                ok = ok && p.sup_Y_sq[j - 1] <= std::pow(sigma, 2.0 * j - 1.0);
        }
        rep.pathwise_bounds.push_back(ok);
        rep.positives += ev;
    }
    rep.p_stb = static_cast<double>(rep.positives) / paths.size();
    rep.interval = wilson_interval(rep.positives, paths.size());
    (void)completed;
    return rep;
}

SpeedSample observed_speed(double Gamma_half, double Gamma_T, double T, double c0, double a_integral_half,
                           double martingale_sum_half, double t_reached) {
    if (t_reached < T) throw NumericalError("observed speed needs a path that reached the horizon");
    SpeedSample s;
    s.C_obs = 2.0 / T * (Gamma_T - Gamma_half);
    s.c0 = c0;
    s.a_average = 2.0 / T * a_integral_half;
    s.martingale = 2.0 / T * martingale_sum_half;
    return s;
}

ConditionalEstimate conditional_expectation(const std::vector<double>& values, const std::vector<bool>& flags,
                                            std::size_t min_positives) {
    if (values.size() != flags.size()) throw ConfigError("values and flags differ in length");
    ConditionalEstimate out{};
    double sum = 0.0, sum2 = 0.0, all2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        all2 += values[i] * values[i];
        if (!flags[i]) continue;
        ++out.positives;
        sum += values[i];
        sum2 += values[i] * values[i];
    }
    if (out.positives < min_positives)
        throw NumericalError("too few event-positive samples for a conditional mean");
    const double k = static_cast<double>(out.positives);
    out.mean = sum / k;
    out.standard_error = k > 1 ? std::sqrt(std::max(0.0, (sum2 / k - out.mean * out.mean) * k / (k - 1)) / k) : 0.0;
    out.p = k / values.size();
    out.correction_bound = std::sqrt(all2 / values.size()) * std::sqrt(out.p * (1.0 - out.p)) / out.p;
    return out;
}

double fit_exceedance_mu(const std::vector<double>& sigma, const std::vector<double>& p_stb,
                         const std::vector<double>& eta, const std::vector<double>& T, int r) {
    double mu = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double miss = 1.0 - p_stb[i];
        if (miss <= 0.0) continue;
        const double ratio = miss / (2.0 * T[i]);
        if (ratio >= 1.0) return 0.0;
        mu = std::min(mu, -std::log(ratio) * std::pow(sigma[i], 2.0 / r) / std::pow(eta[i], 1.0 / r));
    }
    return mu;
}

}  // namespace wavefreeze
