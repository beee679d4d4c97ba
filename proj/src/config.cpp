#include "wavefreeze/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "wavefreeze/errors.hpp"
#include "wavefreeze/io.hpp"

namespace wavefreeze {

namespace {

using nlohmann::json;

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw ConfigError(path + ": " + what);
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    std::string field(const std::string& key) const { return path_ + "." + key; }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number()) fail(field(key), "expected a number");
        return v.get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number_integer()) fail(field(key), "expected an integer");
        return v.get<long long>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const long long v = integer(key, static_cast<long long>(fallback));
        if (v < 0) fail(field(key), "expected a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_boolean()) fail(field(key), "expected a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_string()) fail(field(key), "expected a string");
        return v.get<std::string>();
    }

    const json& at(const std::string& key) const { return obj_.at(key); }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail(field(it.key()), "unknown key");
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

double ExperimentConfig::eta_value() const {
    return eta ? *eta : eta_default(sigma, r, theta);
}

double ExperimentConfig::horizon() const {
    return T ? *T : wavefreeze::horizon(sigma, theta, mu, r, T_min, T_cap);
}

StabilityConfig ExperimentConfig::stability_config() const {
    StabilityConfig c;
    c.eta = eta_value();
    c.theta = theta;
    c.mu = mu;
    c.r = r;
    c.sigma = sigma;
    c.delta = delta;
    c.k_star = k_star;
    c.T_min = T ? *T : T_min;
    c.T_cap = T ? *T : T_cap;
    return c;
}

ExperimentConfig parse_config(const json& doc, const std::string& base_dir) {
    ExperimentConfig c;
    c.source = doc;
    Reader top(doc, "config");

    if (top.has("model")) {
        Reader m(top.at("model"), top.field("model"));
        c.model.name = m.string("name", c.model.name);
        c.model.params.clear();
        if (m.has("params")) {
            const json& p = m.at("params");
            if (!p.is_object()) Reader::fail(m.field("params"), "expected an object");
            for (auto it = p.begin(); it != p.end(); ++it) {
                if (!it.value().is_number()) Reader::fail(m.field("params") + "." + it.key(), "expected a number");
                c.model.params[it.key()] = it.value().get<double>();
            }
        }
        m.finish();
    }
    if (top.has("grid")) {
        Reader g(top.at("grid"), top.field("grid"));
        c.grid.d = static_cast<int>(g.integer("d", c.grid.d));
        c.grid.L = g.number("L", c.grid.L);
        c.grid.N = static_cast<int>(g.integer("N", c.grid.N));
        c.grid.T_perp = g.number("T_perp", c.grid.T_perp);
        c.grid.N_perp = static_cast<int>(g.integer("N_perp", c.grid.N_perp));
        g.finish();
    }
    if (top.has("noise")) {
        Reader n(top.at("noise"), top.field("noise"));
        c.noise.q0 = n.number("q0", c.noise.q0);
        c.noise.ell = n.number("ell", c.noise.ell);
        n.finish();
    }
    if (top.has("V_star")) {
        Reader v(top.at("V_star"), top.field("V_star"));
        c.V_star.kind = v.string("kind", c.V_star.kind);
        c.V_star.seed = v.unsigned_integer("seed", c.V_star.seed);
        c.V_star.file = v.string("file", "");
        if (!c.V_star.file.empty() && std::filesystem::path(c.V_star.file).is_relative())
            c.V_star.file = (std::filesystem::path(base_dir) / c.V_star.file).string();
        if (c.V_star.kind != "bump" && c.V_star.kind != "file" && c.V_star.kind != "zero")
            Reader::fail(v.field("kind"), "expected one of bump, file, zero");
        if (c.V_star.kind == "file" && c.V_star.file.empty()) Reader::fail(v.field("file"), "required for kind file");
        v.finish();
    }

    c.sigma = top.number("sigma", c.sigma);
    c.delta = top.number("delta", c.delta);
    c.r = static_cast<int>(top.integer("r", c.r));
    c.k_star = top.number("k_star", c.k_star);
    c.theta = theta_star(c.r);
    if (top.has("theta")) {
        const json& th = top.at("theta");
        if (th.is_string()) {
            if (th.get<std::string>() != "theta_star") Reader::fail(top.field("theta"), "expected a number or \"theta_star\"");
        } else if (th.is_number()) {
            c.theta = th.get<double>();
            c.theta_star = false;
        } else {
            Reader::fail(top.field("theta"), "expected a number or \"theta_star\"");
        }
    }
    if (top.has("eta")) c.eta = top.number("eta", 0.0);
    c.mu = top.number("mu", c.mu);
    if (top.has("T")) c.T = top.number("T", 0.0);
    c.T_min = top.number("T_min", c.T_min);
    c.T_cap = top.number("T_cap", c.T_cap);
    c.dt = top.number("dt", c.dt);
    c.stability = top.boolean("stability", c.stability);
    c.expansion = top.boolean("expansion", c.expansion);
    c.k_c_sign = top.number("k_c_sign", c.k_c_sign);
    c.replicas = top.unsigned_integer("replicas", c.replicas);
    c.seed = top.unsigned_integer("seed", c.seed);
    c.out = top.string("out", c.out);
    c.record_every = static_cast<int>(top.integer("record_every", c.record_every));
    c.snapshot_every = static_cast<int>(top.integer("snapshot_every", c.snapshot_every));
    c.series_paths = top.unsigned_integer("series_paths", c.series_paths);
    top.finish();

    validate_config(c);
    return c;
}

void validate_config(const ExperimentConfig& c) {
    require(c.grid.d >= 1, "config.grid.d: must be at least 1");
    require(c.grid.N >= 8 && c.grid.N % 2 == 0, "config.grid.N: must be even and at least 8");
    require(c.grid.L > 0.0, "config.grid.L: must be positive");
    require(c.grid.d == 1 || (c.grid.N_perp >= 1 && c.grid.T_perp > 0.0), "config.grid: invalid transverse torus");
    require(c.noise.q0 >= 0.0 && c.noise.ell > 0.0, "config.noise: need q0 >= 0 and ell > 0");
    require(c.k_star > 0.5 * c.grid.d, "hypothesis k_* > d/2 violated (k_star = " + std::to_string(c.k_star) +
                                           ", d = " + std::to_string(c.grid.d) + ")");
    require(c.r >= 3, "hypothesis r >= 3 violated (r = " + std::to_string(c.r) + ")");
    require(c.delta >= 0.0, "hypothesis delta >= 0 violated");
    require(c.sigma >= 0.0, "hypothesis sigma >= 0 violated");
    require(c.dt > 0.0, "config.dt: must be positive");
    require(c.mu > 0.0 && c.mu < 1.0, "config.mu: must lie in (0, 1)");
    require(c.theta >= 0.0 && c.theta < 0.5, "config.theta: must lie in [0, 1/2)");
    require(c.T_min > 0.0 && c.T_min <= c.T_cap, "config.T_min: need 0 < T_min <= T_cap");
    require(!c.T || *c.T > 0.0, "config.T: must be positive");
    require(!c.eta || *c.eta > 0.0, "config.eta: must be positive");
    require(c.record_every >= 0 && c.snapshot_every >= 0, "config: record_every and snapshot_every must be >= 0");
    require(c.k_c_sign == 1.0 || c.k_c_sign == -1.0, "config.k_c_sign: must be 1 or -1");
    const double steps = c.horizon() / c.dt;
    require(std::abs(steps - std::round(steps)) < 1e-6 * std::max(1.0, steps), "config.dt: must divide the horizon T");
    if (c.stability) {
        require(c.expansion, "config.stability: monitoring needs the expansion (set expansion true)");
        require(c.sigma > 0.0 || c.eta, "config.eta: required when sigma = 0 with stability monitoring");
        const double eta = c.eta_value();
        require(c.delta * c.delta < c.mu * eta, "hypothesis delta^2 < mu eta violated (delta^2 = " +
                                                    std::to_string(c.delta * c.delta) +
                                                    ", mu eta = " + std::to_string(c.mu * eta) + ")");
    }
}

Field seeded_bump(const Grid& grid, int components, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field f(grid, components);
    const int tp = grid.transverse_points();
    for (int c = 0; c < components; ++c) {
        const double a1 = nd(rng), a2 = nd(rng), a3 = nd(rng), shift = 0.5 * nd(rng);
        const double b = 0.3 * nd(rng);
        for (int i = 0; i < grid.N; ++i) {
            const double x = grid.x(i) - shift;
            const double base = (a1 + a2 * x + a3 * x * x / 4.0) * std::exp(-x * x / 2.0);
            for (int t = 0; t < tp; ++t) {
                const double y = grid.dx_perp() * t;
                const double tr = tp > 1 ? 1.0 + b * std::sin(2.0 * 3.141592653589793 * y / grid.T_perp) : 1.0;
                f(c, static_cast<std::size_t>(i) * tp + t) = base * tr;
            }
        }
    }
    return f;
}

PreparedConfig prepare_config(const ExperimentConfig& config) {
    validate_config(config);
    PreparedConfig p;
    p.config = config;
    const ModelPtr model = make_builtin_model(config.model.name, config.model.params, config.r);
    const Grid grid = config.grid.grid();
    p.setup = std::make_shared<const SimulationSetup>(model, grid, config.noise.q0, config.noise.ell);
    if (config.V_star.kind == "zero") {
        p.V_star = Field(grid, model->n());
        return p;
    }
    Field raw;
    if (config.V_star.kind == "file") {
        raw = read_snapshot(config.V_star.file);
        if (!(raw.grid() == grid) || raw.components() != model->n())
            throw ConfigError("config.V_star.file: grid or component count does not match the configuration");
    } else {
        raw = seeded_bump(grid, model->n(), config.V_star.seed);
    }
    p.V_star = p.setup->proj().complement(raw);
    const double norm = sobolev_norm(p.V_star, config.k_star + config.r);
    if (!(norm > 0.0)) throw ConfigError("config.V_star: perturbation vanishes after projection");
    p.V_star *= 1.0 / norm;
    return p;
}

PreparedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return prepare_config(parse_config(doc, dir.empty() ? "." : dir));
}

PathOptions PreparedConfig::path_options() const {
    const ExperimentConfig& c = config;
    PathOptions o;
    o.sigma = c.sigma;
    o.delta = c.delta;
    o.dt = c.dt;
    o.T = c.horizon();
    o.r = c.r;
    o.k_star = c.k_star;
    o.k_c_sign = c.k_c_sign;
    o.V_star = V_star;
    o.expansion = c.expansion;
    o.alpha = alpha_of(c.delta, c.sigma, o.T);
    o.stop_on_threshold = c.stability;
    if (c.stability) o.threshold = c.stability_config().threshold();
    o.record_every = c.record_every;
    o.snapshot_every = c.snapshot_every;
    return o;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    json j = {
        {"model", {{"name", c.model.name}, {"params", c.model.params}}},
        {"grid", {{"d", c.grid.d}, {"L", c.grid.L}, {"N", c.grid.N}, {"T_perp", c.grid.T_perp}, {"N_perp", c.grid.N_perp}}},
        {"noise", {{"q0", c.noise.q0}, {"ell", c.noise.ell}}},
        {"V_star", {{"kind", c.V_star.kind}, {"seed", c.V_star.seed}, {"file", c.V_star.file}}},
        {"sigma", c.sigma},
        {"delta", c.delta},
        {"r", c.r},
        {"k_star", c.k_star},
        {"theta", c.theta},
        {"theta_star", c.theta_star},
        {"eta", c.eta_value()},
        {"mu", c.mu},
        {"T", c.horizon()},
        {"T_min", c.T_min},
        {"T_cap", c.T_cap},
        {"dt", c.dt},
        {"stability", c.stability},
        {"expansion", c.expansion},
        {"k_c_sign", c.k_c_sign},
        {"replicas", c.replicas},
        {"seed", c.seed},
        {"out", c.out},
        {"record_every", c.record_every},
        {"snapshot_every", c.snapshot_every},
        {"series_paths", c.series_paths},
    };
    return j;
}

}  // namespace wavefreeze
