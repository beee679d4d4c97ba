#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "wavefreeze/config.hpp"

namespace wavefreeze {

struct ValidationCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct RefinementDelta {
    std::string quantity;
    double coarse = 0.0;
    double fine = 0.0;
    double delta = 0.0;
};

struct ValidationOptions {
    // Fault injection: multiplies psi by this factor before the adjoint checks.
    double psi_scale = 1.0;
    bool refinement = true;
    int threads = 1;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    std::vector<RefinementDelta> refinement;
    double wall_time = 0.0;

    bool passed() const;
    const ValidationCheck* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

// Invariant battery over every module on the configured model and grid.
ValidationReport validate(const PreparedConfig& config, const ValidationOptions& options = {});

}  // namespace wavefreeze
