#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "design_space.hpp"
#include "implausibility.hpp"
#include "scenario.hpp"
#include "waves.hpp"

namespace fhm {

/// Parsed run configuration. `space` and `scenario` accept either inline
/// JSON objects or paths relative to the config file.
struct RunConfig {
    struct WaveSpec {
        int design_size = 100;
        int candidates = 10000;
        std::vector<std::string> gauges;
        ThresholdMode mode = ThresholdMode::general;
        bool use_derivative = true;
    };

    std::optional<ParameterSpace> space;
    Scenario scenario;
    std::string out_dir = "fhm_out";
    std::uint64_t seed = 0;
    int workers = 0;
    std::vector<WaveSpec> waves;
    int posterior_samples = 50;
    double emulator_jitter = 1e-8;
    int projection_count = 1000;
    int folds = 5;
    double target_frac = 0.05;
    double delta_scale = 1e-3;
    std::string forecast_gauge;
    std::string virtual_gauge; // far-side gauge for the with/without study
    std::optional<Eigen::VectorXd> truth;
    std::map<std::string, std::string> observation_paths;
    std::string config_hash; // FNV-1a of the canonical config dump

    static RunConfig load(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir);

    /// Bundled twin-experiment defaults (desk scale). Fields may be
    /// overridden before use.
    static RunConfig bundled_twin();

    void validate() const;
    WaveConfig wave_config(int wave_index) const; // 1-based
    int wave_count() const { return static_cast<int>(waves.size()); }

    std::string provenance() const; // "config_hash=... seed=..."
};

std::string fnv1a_hex(const std::string& data);

} // namespace fhm
