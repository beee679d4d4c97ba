#include "wavefreeze/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/io.hpp"
#include "wavefreeze/limits.hpp"

namespace wavefreeze {

namespace fs = std::filesystem;
using nlohmann::json;

int resolve_threads(int requested) {
    if (const char* env = std::getenv(kThreadsEnv)) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw ConfigError(std::string(kThreadsEnv) + ": expected a positive integer");
        return static_cast<int>(v);
    }
    if (requested > 0) return requested;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t w) {
        for (std::size_t i = w; i < count; i += workers) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

OutputDirectory::OutputDirectory(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_ + ": " + ec.message());
}

std::string OutputDirectory::path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

void OutputDirectory::write_json(const std::string& name, const json& doc) {
    std::ofstream out(path(name));
    if (!out) throw ConfigError("cannot write " + path(name));
    out << doc.dump(2) << "\n";
    add(name);
}

void OutputDirectory::write_csv(const std::string& name, const std::vector<std::string>& header,
                                const std::vector<std::vector<double>>& rows) {
    wavefreeze::write_csv(path(name), header, rows);
    add(name);
}

void OutputDirectory::add(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

json OutputDirectory::file_index() const {
    std::vector<std::string> names = files_;
    std::sort(names.begin(), names.end());
    json index = json::array();
    for (const auto& n : names)
        index.push_back({{"name", n}, {"sha256", sha256_file(path(n))}, {"bytes", fs::file_size(path(n))}});
    return index;
}

MeanEstimate mean_estimate(const std::vector<double>& values) {
    MeanEstimate e;
    e.count = values.size();
    if (values.empty()) return e;
    for (double v : values) e.mean += v;
    e.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return e;
}

namespace {

json estimate_json(const MeanEstimate& e) {
    return {{"count", e.count}, {"mean", e.mean}, {"standard_error", e.standard_error}};
}

}  // namespace

json EnsembleStatistics::to_json() const {
    json j = {
        {"replicas", replicas},
        {"completed", completed},
        {"stopped", stopped},
        {"blown_up", blown_up},
        {"c0", c0},
        {"C_obs", estimate_json(C_obs)},
        {"a_over_sigma_sq", estimate_json(a_over_sigma_sq)},
        {"sup_Z_sq", estimate_json(sup_Z_sq)},
        {"sup_orthogonality", sup_orthogonality},
    };
    j["sup_Y_sq"] = json::array();
    for (const auto& e : sup_Y_sq) j["sup_Y_sq"].push_back(estimate_json(e));
    if (stability) {
        j["stability"] = {{"p_stb", stability->p_stb},
                          {"positives", stability->positives},
                          {"wilson_lower", stability->interval.lower},
                          {"wilson_upper", stability->interval.upper}};
    } else {
        j["stability"] = nullptr;
    }
    if (C_obs_conditional) {
        j["C_obs_conditional"] = {{"mean", C_obs_conditional->mean},
                                  {"standard_error", C_obs_conditional->standard_error},
                                  {"correction_bound", C_obs_conditional->correction_bound},
                                  {"p", C_obs_conditional->p},
                                  {"positives", C_obs_conditional->positives}};
    } else {
        j["C_obs_conditional"] = nullptr;
    }
    if (c2) {
        j["c2"] = *c2;
        j["c2_from_a"] = {{"estimate", a_over_sigma_sq.mean},
                          {"z", a_over_sigma_sq.standard_error > 0.0
                                    ? (a_over_sigma_sq.mean - *c2) / a_over_sigma_sq.standard_error
                                    : 0.0}};
    } else {
        j["c2"] = nullptr;
    }
    return j;
}

bool RunManifest::ok() const {
    return std::none_of(paths.begin(), paths.end(), [](const PathSummary& p) { return p.status == PathStatus::blown_up; });
}

json path_json(const PathSummary& p) {
    json j = {{"replica", p.replica},       {"status", to_string(p.status)}, {"t_end", p.t_end},
              {"t_st", p.t_st},             {"exceeded", p.exceeded},        {"event", p.event},
              {"Gamma", p.Gamma},           {"max_N_full", p.max_N_full},    {"range_flags", p.range_flags},
              {"cutoff_steps", p.cutoff_steps}};
    if (!p.error.empty()) j["error"] = p.error;
    if (p.has_speed) j["C_obs"] = p.C_obs;
    return j;
}

json RunManifest::to_json() const {
    json statuses = json::array();
    for (const auto& p : paths) statuses.push_back(path_json(p));
    return {{"version", version}, {"command", command}, {"seed", seed},   {"config", config},
            {"paths", statuses},  {"ok", ok()},         {"wall_time", wall_time}, {"files", files}};
}

RunManifest finish_manifest(OutputDirectory& out, const ExperimentConfig& config, const std::string& command,
                            std::vector<PathSummary> paths, double wall_time) {
    RunManifest m;
    m.config = to_json(config);
    m.command = command;
    m.seed = config.seed;
    m.paths = std::move(paths);
    m.wall_time = wall_time;
    m.files = out.file_index();
    std::ofstream f(out.path("manifest.json"));
    if (!f) throw ConfigError("cannot write " + out.path("manifest.json"));
    f << m.to_json().dump(2) << "\n";
    return m;
}

EnsembleRun run_ensemble(const PreparedConfig& prepared, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig& cfg = prepared.config;
    const SimulationSetup& setup = *prepared.setup;
    const std::size_t count = cfg.replicas;
    const std::size_t series = options.series_paths ? options.series_paths : cfg.series_paths;

    std::optional<OutputDirectory> out;
    if (options.write) {
        out.emplace(cfg.out);
        if (cfg.snapshot_every > 0) fs::create_directories(fs::path(cfg.out) / "snapshots");
    }

    PathOptions base = prepared.path_options();
    base.stop_on_threshold = cfg.stability && options.stop_on_threshold;
    const double c0 = setup.profile().c0;

    std::vector<PathSummary> paths(count);
    std::vector<PathOutcome> outcomes(count);
    std::vector<PathRecord> kept(std::min(series, count));
    parallel_for(count, resolve_threads(options.threads), [&](std::size_t i) {
        PathOptions o = base;
        if (i >= kept.size()) o.record_every = 0;
        if (out && cfg.snapshot_every > 0) o.snapshot_prefix = (fs::path(cfg.out) / "snapshots" / ("path" + std::to_string(i))).string();
        PathSummary& s = paths[i];
        s.replica = i;
        PathRecord rec;
        try {
            rec = run_path(setup, o, cfg.seed, i);
        } catch (const std::exception& e) {
            s.status = PathStatus::blown_up;
            s.error = e.what();
            outcomes[i] = PathOutcome{false, false, 0.0, o.T, 0.0, 0.0, {}};
            return;
        }
        s.status = rec.status;
        s.t_end = rec.t_end;
        s.t_st = rec.t_st;
        s.exceeded = rec.exceeded;
        s.event = rec.event;
        s.Gamma = rec.Gamma;
        s.max_N_full = rec.max_N_full;
        s.sup_Z_sq = rec.sup_Z_sq;
        s.sup_Y_sq = rec.sup_Y_sq;
        s.sup_orthogonality = rec.sup_orthogonality;
        s.range_flags = rec.range_flags;
        s.cutoff_steps = rec.cutoff_steps;
        if (rec.status != PathStatus::blown_up && rec.t_end >= rec.T - 1e-9) {
            const SpeedSample sp = rec.speed(c0);
            s.has_speed = true;
            s.C_obs = sp.C_obs;
            s.a_average = sp.a_average;
            s.martingale = sp.martingale;
        }
        outcomes[i] = rec.outcome();
        if (i < kept.size()) kept[i] = std::move(rec);
    });

    EnsembleStatistics st;
    st.replicas = count;
    st.c0 = c0;
    std::vector<double> C, A, Zs, C_all;
    std::vector<bool> flags;
    std::vector<std::vector<double>> Ys(static_cast<std::size_t>(cfg.expansion ? cfg.r - 1 : 0));
    for (const auto& p : paths) {
        if (p.status == PathStatus::blown_up) {
            ++st.blown_up;
            continue;
        }
        if (p.status == PathStatus::stopped) ++st.stopped;
        else ++st.completed;
        Zs.push_back(p.sup_Z_sq);
        for (std::size_t j = 0; j < Ys.size() && j < p.sup_Y_sq.size(); ++j) Ys[j].push_back(p.sup_Y_sq[j]);
        st.sup_orthogonality = std::max(st.sup_orthogonality, p.sup_orthogonality);
        if (p.has_speed) {
            C.push_back(p.C_obs);
            flags.push_back(p.event);
            if (cfg.sigma > 0.0) A.push_back(p.a_average / (cfg.sigma * cfg.sigma));
        }
    }
    st.C_obs = mean_estimate(C);
    st.a_over_sigma_sq = mean_estimate(A);
    st.sup_Z_sq = mean_estimate(Zs);
    for (const auto& y : Ys) st.sup_Y_sq.push_back(mean_estimate(y));
    if (cfg.stability && count >= 2) st.stability = stability_event(outcomes, cfg.stability_config());
    if (cfg.stability && std::count(flags.begin(), flags.end(), true) >= 30)
        st.C_obs_conditional = conditional_expectation(C, flags);
    if (options.limit_check && cfg.sigma > 0.0) {
        const FreezeContext ctx = setup.context(cfg.sigma, cfg.k_c_sign);
        const CovarianceOperator cov = stationary_covariance(ctx, setup.op(), setup.proj(), false);
        st.c2 = wave_speed_c2(ctx, cov).c2;
    }

    EnsembleRun run;
    run.statistics = st;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out) {
        std::vector<std::vector<double>> rows;
        for (const auto& p : paths) {
            std::vector<double> row = {static_cast<double>(p.replica), static_cast<double>(p.status), p.t_end, p.t_st,
                                       p.exceeded ? 1.0 : 0.0, p.event ? 1.0 : 0.0, p.Gamma,
                                       p.has_speed ? p.C_obs : NAN, p.has_speed ? p.a_average : NAN,
                                       p.has_speed ? p.martingale : NAN, p.max_N_full, p.sup_Z_sq, p.sup_orthogonality};
            rows.push_back(std::move(row));
        }
        out->write_csv("paths.csv",
                       {"replica", "status", "t_end", "t_st", "exceeded", "event", "Gamma", "C_obs", "a_average",
                        "martingale", "max_N_full", "sup_Z_sq", "sup_orthogonality"},
                       rows);
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (!kept[i].rows.empty()) out->write_csv("series_" + std::to_string(i) + ".csv", kept[i].header, kept[i].rows);
        if (cfg.snapshot_every > 0)
            for (const auto& e : fs::directory_iterator(fs::path(cfg.out) / "snapshots"))
                out->add((fs::path("snapshots") / e.path().filename()).string());
        out->write_json("summary.json", st.to_json());
        run.manifest = finish_manifest(*out, cfg, options.command, paths, wall);
    } else {
        run.manifest.config = to_json(cfg);
        run.manifest.command = options.command;
        run.manifest.seed = cfg.seed;
        run.manifest.paths = paths;
        run.manifest.wall_time = wall;
    }
    return run;
}

}  // namespace wavefreeze
