#include "run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "json_util.hpp"

namespace fhm {

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace {

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open JSON file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

nlohmann::json resolve_ref(const nlohmann::json& node, const std::string& base_dir) {
    if (node.is_object()) return node;
    if (node.is_string()) {
        std::filesystem::path p(node.get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        return load_json_file(p.string());
    }
    throw ConfigError("expected an inline object or a path string");
}

} // namespace

RunConfig RunConfig::load(const std::string& path) {
    const nlohmann::json j = load_json_file(path);
    return from_json(j, std::filesystem::path(path).parent_path().string());
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
    RunConfig cfg;
    try {
        cfg.space = ParameterSpace::from_json(resolve_ref(j.at("space"), base_dir));
        cfg.scenario = Scenario::from_json(resolve_ref(j.at("scenario"), base_dir));
        if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
        for (const auto& jw : j.at("waves")) {
            WaveSpec w;
            if (jw.contains("design_size")) w.design_size = jw["design_size"].get<int>();
            if (jw.contains("candidates")) w.candidates = jw["candidates"].get<int>();
            w.gauges = jw.at("gauges").get<std::vector<std::string>>();
            if (jw.contains("threshold_mode")) {
                w.mode = threshold_mode_from_string(jw["threshold_mode"].get<std::string>());
            }
            if (jw.contains("use_derivative")) w.use_derivative = jw["use_derivative"].get<bool>();
            cfg.waves.push_back(std::move(w));
        }
        if (j.contains("emulator")) {
            const auto& je = j["emulator"];
            if (je.contains("posterior_samples")) {
                cfg.posterior_samples = je["posterior_samples"].get<int>();
            }
            if (je.contains("jitter")) cfg.emulator_jitter = je["jitter"].get<double>();
        }
        if (j.contains("projection") && j["projection"].contains("count")) {
            cfg.projection_count = j["projection"]["count"].get<int>();
        }
        if (j.contains("uncertainty")) {
            const auto& ju = j["uncertainty"];
            if (ju.contains("folds")) cfg.folds = ju["folds"].get<int>();
            if (ju.contains("target_frac")) cfg.target_frac = ju["target_frac"].get<double>();
            if (ju.contains("delta_scale")) cfg.delta_scale = ju["delta_scale"].get<double>();
        }
        if (j.contains("forecast_gauge")) cfg.forecast_gauge = j["forecast_gauge"].get<std::string>();
        if (j.contains("virtual_gauge")) cfg.virtual_gauge = j["virtual_gauge"].get<std::string>();
        if (j.contains("truth")) cfg.truth = vector_from_json(j["truth"]);
        if (j.contains("observations")) {
            for (const auto& [gauge, path] : j["observations"].items()) {
                std::filesystem::path p(path.get<std::string>());
                if (p.is_relative() && !base_dir.empty()) {
                    p = std::filesystem::path(base_dir) / p;
                }
                cfg.observation_paths[gauge] = p.string();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    // Hash the semantic configuration only: where results land and how many
    // workers compute them must not change what the results are.
    nlohmann::json canonical = j;
    canonical.erase("out");
    canonical.erase("workers");
    cfg.config_hash = fnv1a_hex(canonical.dump());
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::bundled_twin() {
    nlohmann::json j = {
        {"space", Scenario::bundled_space_json()},
        {"scenario", Scenario::bundled_default().to_json()},
        {"out", "fhm_twin"},
        {"seed", 20260809},
        {"workers", 0},
        {"waves",
         {{{"design_size", 100},
           {"candidates", 10000},
           {"gauges", {"dart_1", "dart_2", "dart_3", "dart_4", "virtual_1"}}},
          {{"design_size", 100},
           {"candidates", 10000},
           {"gauges", {"dart_1", "dart_2", "dart_3", "dart_4", "virtual_1"}}}}},
        {"forecast_gauge", "coastal_1"},
        {"virtual_gauge", "virtual_1"},
        {"truth", {63.0, 24.6, 1.0, 0.15, 8.0}},
    };
    return from_json(j, "");
}

void RunConfig::validate() const {
    require(space.has_value(), "run config: parameter space missing");
    require(!waves.empty(), "run config: at least one wave required");
    for (const auto& w : waves) {
        require(w.design_size >= 1, "run config: wave design size must be positive");
        require(w.candidates >= w.design_size,
                "run config: wave candidates must be >= design size");
        require(!w.gauges.empty(), "run config: wave needs screening gauges");
        for (const auto& g : w.gauges) {
            if (!scenario.has_gauge(g)) {
                throw ConfigError("run config: screening gauge '" + g + "' not in scenario");
            }
        }
    }
    if (!forecast_gauge.empty() && !scenario.has_gauge(forecast_gauge)) {
        throw ConfigError("run config: forecast gauge '" + forecast_gauge + "' not in scenario");
    }
    if (!virtual_gauge.empty() && !scenario.has_gauge(virtual_gauge)) {
        throw ConfigError("run config: virtual gauge '" + virtual_gauge + "' not in scenario");
    }
    if (truth.has_value()) {
        require(truth->size() == space->size(), "run config: truth dimension mismatch");
        require(space->contains(*truth), "run config: truth lies outside the parameter space");
    }
    if (!truth.has_value()) {
        require(!observation_paths.empty(),
                "run config: either 'truth' (twin mode) or 'observations' must be given");
    }
    require(posterior_samples >= 2, "run config: posterior_samples must be >= 2");
    require(projection_count >= 1, "run config: projection count must be positive");
    require(folds >= 2, "run config: folds must be >= 2");
    require(target_frac > 0.0 && target_frac < 1.0, "run config: target_frac must be in (0,1)");
    require(delta_scale > 0.0, "run config: delta_scale must be positive");
}

WaveConfig RunConfig::wave_config(int wave_index) const {
    require(wave_index >= 1 && wave_index <= wave_count(), "run config: wave index out of range");
    const WaveSpec& spec = waves[static_cast<std::size_t>(wave_index - 1)];
    WaveConfig w;
    w.index = wave_index;
    w.design_size = spec.design_size;
    w.candidate_count = spec.candidates;
    w.gauges = spec.gauges;
    w.mode = spec.mode;
    w.use_derivative = spec.use_derivative;
    w.posterior_samples = posterior_samples;
    w.folds = folds;
    w.target_frac = target_frac;
    w.delta_scale = delta_scale;
    w.projection_count = projection_count;
    w.emulator_jitter = emulator_jitter;
    w.seed = seed;
    w.workers = workers;
    return w;
}

std::string RunConfig::provenance() const {
    return "config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

} // namespace fhm
