#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curve.hpp"
#include "design_space.hpp"
#include "implausibility.hpp"
#include "ope.hpp"
#include "projection.hpp"
#include "scenario.hpp"
#include "toy_simulator.hpp"

namespace fhm {

/// One wave of the history-matching loop.
struct WaveConfig {
    int index = 1;
    int design_size = 100;
    int candidate_count = 10000;
    std::vector<std::string> gauges; // screening gauges
    ThresholdMode mode = ThresholdMode::general;
    std::optional<double> threshold_override;
    bool use_derivative = true;
    int posterior_samples = 50;
    int folds = 5;
    double target_frac = 0.05;
    double delta_scale = 1e-3;
    int projection_count = 1000;
    double emulator_jitter = 1e-8;
    std::uint64_t seed = 0; // run-global; stage seeds are derived per wave
    int workers = 1;

    void validate() const;

    std::uint64_t design_seed() const;
    std::uint64_t candidate_seed() const;
    std::uint64_t projection_seed() const;
    std::uint64_t classify_seed() const;
};

struct WaveResult {
    WaveConfig config;
    ParameterSpace space; // the box this wave screened
    DesignMatrix design;
    EnsembleTable ensemble; // simulated for every scenario gauge
    std::vector<std::string> ensemble_gauges;
    std::map<std::string, OpeModel> models; // screening gauges; extras on demand
    Eigen::MatrixXd candidates;
    std::optional<ProjectionEnsemble> projection;
    std::vector<ObservedGauge> screening_obs;
    ClassifyResult classification;
    Eigen::MatrixXd nroy_points;
    bool all_ruled_out = false;
    ParameterSpace next_box; // bounding box of NROY intersected with `space`

    int gauge_index(const std::string& name) const; // index into ensemble_gauges
};

/// Full wave: LHS design -> ensemble simulation -> per-gauge OPE training
/// (hyperparameters by marginal-likelihood grid descent) -> candidate
/// screening against the observations -> NROY set and next box. An empty
/// NROY set is reported via `all_ruled_out`, not an exception.
WaveResult run_wave(const ParameterSpace& space, const Scenario& scenario,
                    const WaveConfig& config,
                    const std::map<std::string, FunctionalCurve>& observations,
                    const CurveCodec& codec);

/// Refined box for the next wave; errors when the NROY set is empty.
ParameterSpace next_space(const WaveResult& result);

/// Trains an emulator for a gauge from the wave's stored ensemble (used for
/// forecast targets that were not screened). Cached in result.models.
const OpeModel& ensure_gauge_model(WaveResult& result, const std::string& gauge,
                                   const CurveCodec& codec);

/// Emulated mean curves at every NROY candidate for a target gauge.
std::vector<FunctionalCurve> forecast(const WaveResult& result, const OpeModel& target_model,
                                      const CurveCodec& codec);

/// Grid-value matrix (curves x grid points) for reporting.
Eigen::MatrixXd curves_to_matrix(const std::vector<FunctionalCurve>& curves, const TimeGrid& grid);

} // namespace fhm
