#include "scenario.hpp"

#include <algorithm>

#include "errors.hpp"

namespace fhm {

const Gauge& Scenario::gauge(const std::string& name) const {
    for (const auto& g : gauges) {
        if (g.name == name) return g;
    }
    throw ConfigError("scenario: unknown gauge '" + name + "'");
}

bool Scenario::has_gauge(const std::string& name) const {
    return std::any_of(gauges.begin(), gauges.end(),
                       [&](const Gauge& g) { return g.name == name; });
}

std::vector<Gauge> Scenario::select(const std::vector<std::string>& names) const {
    std::vector<Gauge> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(gauge(n));
    return out;
}

nlohmann::json Scenario::to_json() const {
    nlohmann::json jg = nlohmann::json::array();
    for (const auto& g : gauges) {
        jg.push_back({{"name", g.name},
                      {"x", g.gx},
                      {"y", g.gy},
                      {"window", {g.t_start, g.t_end}}});
    }
    return {{"wave_speed", wave_speed}, {"grid_points", grid_points}, {"gauges", jg}};
}

Scenario Scenario::from_json(const nlohmann::json& j) {
    Scenario s;
    s.wave_speed = j.at("wave_speed").get<double>();
    s.grid_points = j.at("grid_points").get<int>();
    if (s.wave_speed <= 0.0) throw ConfigError("scenario: wave_speed must be positive");
    if (s.grid_points < 4) throw ConfigError("scenario: grid_points must be at least 4");
    for (const auto& jg : j.at("gauges")) {
        Gauge g;
        g.name = jg.at("name").get<std::string>();
        g.gx = jg.at("x").get<double>();
        g.gy = jg.at("y").get<double>();
        const auto& w = jg.at("window");
        if (!w.is_array() || w.size() != 2) {
            throw ConfigError("scenario: gauge '" + g.name + "' window must be [start, end]");
        }
        g.t_start = w[0].get<double>();
        g.t_end = w[1].get<double>();
        if (g.t_end <= g.t_start) {
            throw ConfigError("scenario: gauge '" + g.name + "' window must have start < end");
        }
        s.gauges.push_back(std::move(g));
    }
    if (s.gauges.empty()) throw ConfigError("scenario: at least one gauge required");
    return s;
}

Scenario Scenario::bundled_default() {
    Scenario s;
    s.wave_speed = 1.0;
    s.grid_points = 241;
    s.gauges = {
        // Deep-water gauges down-range of the source box.
        {"dart_1", 66.5, 20.0, 0.0, 15.0},
        {"dart_2", 68.0, 22.0, 0.0, 15.0},
        {"dart_3", 69.5, 18.5, 0.0, 18.0},
        {"dart_4", 64.5, 17.5, 0.0, 16.0},
        // Far-side gauge, opposite the dart cluster relative to the source.
        {"virtual_1", 58.0, 21.5, 0.0, 15.0},
        // Coastal forecast targets beyond the darts.
        {"coastal_1", 72.8, 19.1, 1.0, 21.0},
        {"coastal_2", 72.9, 18.7, 1.0, 21.0},
        {"coastal_3", 72.6, 19.5, 1.0, 21.0},
        {"coastal_4", 73.1, 18.3, 1.0, 21.0},
    };
    return s;
}

nlohmann::json Scenario::bundled_space_json() {
    return {{"dims",
             {{{"name", "x0"}, {"lo", 60.0}, {"hi", 66.0}, {"unit", "deg"}},
              {{"name", "y0"}, {"lo", 24.0}, {"hi", 25.2}, {"unit", "deg"}},
              {{"name", "sx"}, {"lo", 0.5}, {"hi", 1.5}, {"unit", "deg"}},
              {{"name", "sy"}, {"lo", 0.1}, {"hi", 0.2}, {"unit", "deg"}},
              {{"name", "h"}, {"lo", 4.0}, {"hi", 12.0}, {"unit", "m"}}}}};
}

} // namespace fhm
