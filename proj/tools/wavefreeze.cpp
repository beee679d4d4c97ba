#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include "wavefreeze/config.hpp"
#include "wavefreeze/ensemble.hpp"
#include "wavefreeze/errors.hpp"
#include "wavefreeze/limits.hpp"
#include "wavefreeze/validate.hpp"

using namespace wavefreeze;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    int threads = 0;
    std::optional<std::string> out;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

PreparedConfig load(const CommonArgs& args) {
    PreparedConfig p = load_config(args.config);
    if (args.seed) p.config.seed = *args.seed;
    if (args.replicas) p.config.replicas = *args.replicas;
    if (args.out) p.config.out = *args.out;
    return p;
}

int run_wave(const CommonArgs& args) {
    const auto start = std::chrono::steady_clock::now();
    const PreparedConfig p = load(args);
    const SimulationSetup& s = *p.setup;
    const WaveProfile& w = s.profile();
    OutputDirectory out(p.config.out);
    out.write_json("wave.json", {{"c0", w.c0},
                                 {"beta_tw", s.op().beta_tw()},
                                 {"gap", s.op().gap()},
                                 {"beta", s.op().beta()},
                                 {"residual", w.residual},
                                 {"adjoint_residual", w.adjoint_residual},
                                 {"far_field_error", w.far_field_error},
                                 {"lambda0_residual", w.lambda0_residual},
                                 {"newton_iterations", w.newton_iterations},
                                 {"nu_minus", w.nu_minus},
                                 {"nu_plus", w.nu_plus}});
    const int n = s.model()->n();
    std::vector<std::string> header = {"x"};
    for (const char* name : {"phi0", "dphi0", "psi"})
        for (int c = 0; c < n; ++c) header.push_back(std::string(name) + "_" + std::to_string(c));
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < w.line.N; ++i) {
        std::vector<double> row = {w.line.x(i)};
        for (const Field* f : {&w.phi0, &w.dphi0[0], &w.psi})
            for (int c = 0; c < n; ++c) row.push_back((*f)(c, i));
        rows.push_back(std::move(row));
    }
    out.write_csv("profile.csv", header, rows);
    std::vector<std::complex<double>> ev(s.op().eigenvalues().data(), s.op().eigenvalues().data() + s.op().eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() > b.real(); });
    rows.clear();
    for (std::size_t i = 0; i < std::min<std::size_t>(ev.size(), 64); ++i) rows.push_back({ev[i].real(), ev[i].imag()});
    out.write_csv("spectrum.csv", {"re", "im"}, rows);
    finish_manifest(out, p.config, "wave", {}, seconds_since(start));
    std::cout << "c0 = " << w.c0 << ", beta_tw = " << s.op().beta_tw() << "\n";
    return kOk;
}

int run_ensemble_command(const CommonArgs& args, const std::string& command) {
    const PreparedConfig p = load(args);
    RunOptions o;
    o.command = command;
    o.threads = args.threads;
    if (command != "simulate") o.stop_on_threshold = false;
    if (command == "expand") o.series_paths = std::max<std::size_t>(p.config.replicas, 1);
    const EnsembleRun run = run_ensemble(p, o);
    const EnsembleStatistics& st = run.statistics;
    if (command == "speed") {
        OutputDirectory out(p.config.out);
        json j = {{"c0", st.c0}, {"sigma", p.config.sigma}, {"C_obs", st.C_obs.mean}, {"C_obs_se", st.C_obs.standard_error}};
        if (st.c2) {
            const double predicted = st.c0 + *st.c2 * p.config.sigma * p.config.sigma;
            j["c2"] = *st.c2;
            j["predicted"] = predicted;
            j["z"] = st.C_obs.standard_error > 0 ? (st.C_obs.mean - predicted) / st.C_obs.standard_error : 0.0;
        }
        if (st.C_obs_conditional) j["C_obs_conditional"] = st.C_obs_conditional->mean;
        std::ofstream(out.path("speed.json")) << j.dump(2) << "\n";
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << st.to_json().dump(2) << "\n";
    }
    if (!run.manifest.ok()) {
        std::cerr << "wavefreeze: " << st.blown_up << " path(s) blew up\n";
        return kNumericalError;
    }
    return kOk;
}

int run_limits(const CommonArgs& args) {
    const auto start = std::chrono::steady_clock::now();
    const PreparedConfig p = load(args);
    const SimulationSetup& s = *p.setup;
    const double sigma = p.config.sigma > 0.0 ? p.config.sigma : 1.0;
    const FreezeContext ctx = s.context(sigma, p.config.k_c_sign);
    const CovarianceOperator cov = stationary_covariance(ctx, s.op(), s.proj(), true);
    const SpeedCoefficient c2 = wave_speed_c2(ctx, cov);
    json j = {{"c0", s.profile().c0},
              {"trace", cov.trace},
              {"trace_smith", cov.trace_smith},
              {"route_difference", cov.route_difference},
              {"lyapunov_residual", cov.lyapunov_residual},
              {"c2", c2.c2},
              {"c2_terms", {{"hessian", c2.hessian_term}, {"K", c2.K_term}, {"nu", c2.nu_term}, {"chi_l", c2.chi_l}}},
              {"speed_prediction", s.profile().c0 + c2.c2 * p.config.sigma * p.config.sigma}};
    OutputDirectory out(p.config.out);
    const Grid& g = cov.diagonal.grid();
    const int tp = g.transverse_points();
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < g.N; ++i) {
        std::vector<double> row = {g.x(i)};
        for (int c = 0; c < cov.diagonal.components(); ++c) row.push_back(cov.diagonal(c, static_cast<std::size_t>(i) * tp));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header = {"x"};
    for (int c = 0; c < cov.diagonal.components(); ++c) header.push_back("c_" + std::to_string(c));
    out.write_csv("covariance_diag.csv", header, rows);
    if (s.grid().d == 1) {
        const MeanLimit ml = mean_limit_Y2(ctx, s.op(), s.proj(), cov);
        j["mean_Y2_L2"] = l2_norm(ml.mean);
        j["mean_Y2_fd_error"] = ml.fd_error;
        j["mean_Y2_truncation"] = ml.truncation_error;
        rows.clear();
        for (int i = 0; i < s.grid().N; ++i) {
            std::vector<double> row = {s.grid().x(i)};
            for (int c = 0; c < ml.mean.components(); ++c) row.push_back(ml.mean(c, i));
            rows.push_back(std::move(row));
        }
        header = {"x"};
        for (int c = 0; c < ml.mean.components(); ++c) header.push_back("mean_" + std::to_string(c));
        out.write_csv("mean_Y2.csv", header, rows);
        if (p.config.r == 3) {
            const LimitCoefficients h = functional_h_infinity(ctx, s.op(), s.proj(), cov,
                                                              [](const Field& v) { return inner_product(v, v); });
            j["h_inf_squared_norm"] = h.h_inf;
        }
    }
    out.write_json("limits.json", j);
    finish_manifest(out, p.config, "limits", {}, seconds_since(start));
    std::cout << j.dump(2) << "\n";
    return kOk;
}

int run_validate(const CommonArgs& args) {
    const auto start = std::chrono::steady_clock::now();
    const PreparedConfig p = load(args);
    ValidationOptions o;
    o.threads = resolve_threads(args.threads);
    const ValidationReport report = validate(p, o);
    OutputDirectory out(p.config.out);
    out.write_json("validate.json", report.to_json());
    finish_manifest(out, p.config, "validate", {}, seconds_since(start));
    for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance
                  << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
    for (const auto& r : report.refinement)
        std::cout << "refinement " << r.quantity << " delta=" << r.delta << "\n";
    return report.passed() ? kOk : kNumericalError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic travelling-front experiments"};
    app.require_subcommand(1);
    CommonArgs args;
    const std::vector<std::string> commands = {"wave", "simulate", "expand", "limits", "speed", "validate"};
    for (const auto& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config, "JSON configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", args.seed, "Base seed");
        sub->add_option("--replicas", args.replicas, "Number of paths");
        sub->add_option("--threads", args.threads, std::string("Workers (") + kThreadsEnv + " overrides)");
        sub->add_option("--out", args.out, "Output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "wave") return run_wave(args);
        if (command == "limits") return run_limits(args);
        if (command == "validate") return run_validate(args);
        return run_ensemble_command(args, command);
    } catch (const ConfigError& e) {
        std::cerr << "wavefreeze: config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        std::cerr << "wavefreeze: numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "wavefreeze: numerical failure: " << e.what() << "\n";
        return kNumericalError;
    }
}
