#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "time_grid.hpp"
#include "toy_simulator.hpp"

namespace fhm {

/// Physical layout of a run: wave speed, shared grid resolution, and the
/// gauge network. Loaded from scenario JSON.
class Scenario {
public:
    double wave_speed = 1.0;
    int grid_points = 241;
    std::vector<Gauge> gauges;

    TimeGrid make_grid() const { return TimeGrid::uniform(grid_points); }

    const Gauge& gauge(const std::string& name) const;
    bool has_gauge(const std::string& name) const;
    std::vector<Gauge> select(const std::vector<std::string>& names) const;

    nlohmann::json to_json() const;
    static Scenario from_json(const nlohmann::json& j);

    /// Bundled default: a Makran-like source box with four DART-like gauges
    /// down-range, four coastal gauges beyond them, and one virtual gauge on
    /// the far side of the source.
    static Scenario bundled_default();

    /// The parameter box matching bundled_default().
    static nlohmann::json bundled_space_json();
};

} // namespace fhm
