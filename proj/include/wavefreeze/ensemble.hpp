#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavefreeze/config.hpp"
#include "wavefreeze/simulator.hpp"
#include "wavefreeze/stability.hpp"

namespace wavefreeze {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kThreadsEnv = "WAVEFREEZE_THREADS";

// Worker count: the environment override wins, then the request, then the hardware.
int resolve_threads(int requested);

// Runs body(i) for i < count on a static partition of threads. Exceptions
// are collected and the one with the smallest index is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

// Output directory bookkeeping; every written file is hashed into the manifest.
class OutputDirectory {
public:
    explicit OutputDirectory(std::string dir);

    const std::string& dir() const { return dir_; }
    std::string path(const std::string& name) const;
    void write_json(const std::string& name, const nlohmann::json& doc);
    void write_csv(const std::string& name, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows);
    void add(const std::string& name);
    // {name, sha256, bytes} for every file, sorted by name.
    nlohmann::json file_index() const;

private:
    std::string dir_;
    std::vector<std::string> files_;
};

struct PathSummary {
    std::size_t replica = 0;
    PathStatus status = PathStatus::completed;
    std::string error;
    double t_end = 0.0, t_st = 0.0;
    bool exceeded = false, event = false;
    double Gamma = 0.0;
    bool has_speed = false;
    double C_obs = 0.0, a_average = 0.0, martingale = 0.0;
    double max_N_full = 0.0, sup_Z_sq = 0.0, sup_orthogonality = 0.0;
    std::vector<double> sup_Y_sq;
    std::size_t range_flags = 0, cutoff_steps = 0;
};

struct MeanEstimate {
    std::size_t count = 0;
    double mean = 0.0;
    double standard_error = 0.0;
};
MeanEstimate mean_estimate(const std::vector<double>& values);

struct EnsembleStatistics {
    std::size_t replicas = 0, completed = 0, stopped = 0, blown_up = 0;
    std::optional<StabilityReport> stability;
    MeanEstimate C_obs;
    MeanEstimate a_over_sigma_sq;
    std::optional<ConditionalEstimate> C_obs_conditional;
    std::vector<MeanEstimate> sup_Y_sq;
    MeanEstimate sup_Z_sq;
    double sup_orthogonality = 0.0;
    double c0 = 0.0;
    std::optional<double> c2;  // limit cross-check

    nlohmann::json to_json() const;
};

struct RunOptions {
    std::string command = "simulate";
    int threads = 0;
    bool write = true;
    bool stop_on_threshold = true;  // false keeps paths running past exceedance
    bool limit_check = true;
    std::size_t series_paths = 0;   // overrides config.series_paths when nonzero
};

struct RunManifest {
    nlohmann::json config;
    std::string version = kVersion;
    std::string command;
    std::uint64_t seed = 0;
    std::vector<PathSummary> paths;
    double wall_time = 0.0;
    nlohmann::json files = nlohmann::json::array();

    bool ok() const;
    nlohmann::json to_json() const;
};

struct EnsembleRun {
    EnsembleStatistics statistics;
    RunManifest manifest;
};

// Replica i uses stream i of the configured seed; reductions run in replica order.
EnsembleRun run_ensemble(const PreparedConfig& config, const RunOptions& options = {});

nlohmann::json path_json(const PathSummary& path);

// Writes manifest.json for a non-ensemble command.
RunManifest finish_manifest(OutputDirectory& out, const ExperimentConfig& config, const std::string& command,
                            std::vector<PathSummary> paths, double wall_time);

}  // namespace wavefreeze
