#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "wavefreeze/field.hpp"
#include "wavefreeze/simulator.hpp"
#include "wavefreeze/stability.hpp"

namespace wavefreeze {

struct ModelSpec {
    std::string name = "nagumo";
    std::map<std::string, double> params{{"a", 0.25}};
};

struct GridSpec {
    int d = 1;
    double L = 32.0;
    int N = 256;
    double T_perp = 6.283185307179586;
    int N_perp = 1;

    Grid grid() const { return Grid::make(d, L, N, T_perp, N_perp); }
};

struct NoiseSpec {
    double q0 = 0.25;
    double ell = 2.0;
};

// Initial perturbation source: a seeded smooth bump, a snapshot file or none.
struct PerturbationSpec {
    std::string kind = "bump";  // bump | file | zero
    std::uint64_t seed = 1;
    std::string file;
};

struct ExperimentConfig {
    ModelSpec model;
    GridSpec grid;
    NoiseSpec noise;
    PerturbationSpec V_star;
    double sigma = 0.02;
    double delta = 0.0;
    int r = 3;
    double k_star = 1.0;
    double theta = 0.3;
    bool theta_star = true;
    std::optional<double> eta;
    double mu = 0.1;
    std::optional<double> T;  // fixed horizon; otherwise T(sigma; theta) clamped to [T_min, T_cap]
    double T_min = 3.0;
    double T_cap = 100.0;
    double dt = 1e-3;
    bool stability = true;
    bool expansion = true;
    double k_c_sign = -1.0;
    std::size_t replicas = 1;
    std::uint64_t seed = 0;
    std::string out = "out";
    int record_every = 10;
    int snapshot_every = 0;
    std::size_t series_paths = 1;  // replicas whose time series are written
    nlohmann::json source;         // document as read, echoed in manifests

    double horizon() const;
    double eta_value() const;
    StabilityConfig stability_config() const;
};

// Setup data derived from a validated configuration.
struct PreparedConfig {
    ExperimentConfig config;
    std::shared_ptr<const SimulationSetup> setup;
    Field V_star;  // projected off the neutral mode, unit H^{k_*+r} norm (or zero)

    PathOptions path_options() const;
};

// Schema and hypothesis checks; throws ConfigError naming the field or constraint.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
void validate_config(const ExperimentConfig& config);

// Reads, validates and prepares: solves the wave, then loads or generates V_*.
PreparedConfig prepare_config(const ExperimentConfig& config);
PreparedConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& config);

// Smooth localized perturbation with the given components, seeded.
Field seeded_bump(const Grid& grid, int components, std::uint64_t seed);

}  // namespace wavefreeze
