#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "run_config.hpp"

namespace fhm {

/// Outcome of the end-to-end twin experiment: observations are generated at
/// a known truth input, the full multi-wave loop runs, and the recovery
/// checks below are evaluated.
struct TwinReport {
    int waves = 0;
    std::vector<double> nroy_fractions;
    std::vector<int> nroy_counts;
    std::vector<int> curve_only_counts;
    std::vector<bool> truth_nroy;
    std::vector<bool> truth_in_box;
    bool nesting_ok = false;          // box(w+1) inside box(w) inside the prior box
    bool volume_monotone_ok = false;  // box volume fraction nonincreasing
    bool fraction_ok = false;         // per-wave NROY fraction within [1%, 15%]
    bool derivative_filter_ok = false; // curve-and-derivative NROY <= curve-only NROY
    bool truth_ok = false;            // truth NROY and inside every refined box
    bool virtual_present = false;
    int nroy_with_virtual = 0;
    int nroy_without_virtual = 0;
    bool virtual_ok = true;           // adding the far-side gauge never enlarges NROY
    int fhm_forecast_count = 0;
    int landmark_forecast_count = 0;
    bool landmark_truth_nroy = false; // truth passes the landmark screen too
    double fhm_area = 0.0;
    double landmark_area = 0.0;
    bool area_ok = false;             // FHM envelope tighter than the landmark baseline
    double fhm_containment = 0.0;     // fraction of grid points covering the true curve
    bool containment_ok = false;      // >= 95%
    bool pass = false;

    nlohmann::json to_json() const;
    std::string summary_lines() const;
};

/// Stage-oriented driver over a run configuration. Stages communicate only
/// through files under the output directory, so they can run in separate
/// processes; each validates its dependencies and fails with a
/// MissingDependency naming the absent artifact.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg);

    const RunConfig& config() const { return cfg_; }

    /// wave_<i>/design.csv + ensemble/; wave i > 1 needs wave_<i-1>/result.json.
    /// In twin mode also writes observations/ on the first wave.
    void simulate(int wave_index);

    /// wave_<i>/models/model_<gauge>.json for every screening gauge.
    void train(int wave_index);

    /// Candidate screening: implausibility.csv, nroy.csv, result.json.
    void wave(int wave_index);

    /// Forecast reports at `gauge` from the final completed wave.
    void forecast(const std::string& gauge);

    /// Landmark-baseline comparison on the final wave: comparison.csv.
    void compare();

    /// Full in-process twin experiment; writes all stage artifacts plus
    /// twin_summary.json and timings.csv.
    TwinReport twin();

    std::string wave_dir(int wave_index) const;

private:
    RunConfig cfg_;
    CurveCodec codec_;

    std::map<std::string, FunctionalCurve> observations() const;
    ParameterSpace wave_space(int wave_index) const;
    int last_completed_wave() const;
};

} // namespace fhm
