#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curve.hpp"
#include "ope.hpp"
#include "projection.hpp"

namespace fhm {

enum class ThresholdMode { unimodal, general };

/// 3 under the 3-sigma rule (unimodal predictive), 5 under the Chebyshev
/// bound (general case; exceedance mass at most 1/25 = 4%).
double threshold(ThresholdMode mode);

ThresholdMode threshold_mode_from_string(const std::string& s);
std::string to_string(ThresholdMode mode);

/// Variance budget entering the implausibility denominator: the candidate's
/// own emulator variance in projection space plus the shared observational +
/// discrepancy variance estimated once per wave component.
struct UncertaintyBudget {
    double emu_var = 0.0;
    double shared_var = 0.0;
};

/// dist / sqrt(emu_var + shared_var); errors when the total variance is zero.
double implausibility(double dist, double emu_var, double shared_var);

inline double implausibility(double dist, const UncertaintyBudget& budget) {
    return implausibility(dist, budget.emu_var, budget.shared_var);
}

/// Shared observational + discrepancy variance via k-fold cross-validated
/// threshold calibration: on each held-out complement, the additive variance
/// `a` grows from zero in steps of delta_step until at least
/// b = target_frac * n (k-1)/k members fall below the implausibility
/// threshold; the k stopping values are averaged. Deterministic per seed.
double estimate_shared_uncertainty(const Eigen::VectorXd& dists, const Eigen::VectorXd& emu_vars,
                                   int folds, double target_frac, double delta_step,
                                   double threshold_value, std::uint64_t seed);

/// Observation data for one gauge, prepared on the shared grid.
struct ObservedGauge {
    std::string name;
    Eigen::VectorXd curve_values;
    Eigen::VectorXd deriv_values;
};

ObservedGauge make_observed(const std::string& name, const FunctionalCurve& curve,
                            const CurveCodec& codec);

struct ClassifyConfig {
    int posterior_samples = 50;
    int folds = 5;
    double target_frac = 0.05;
    double delta_scale = 1e-3; // delta_step = delta_scale * median(dists)
    ThresholdMode mode = ThresholdMode::general;
    std::optional<double> threshold_override; // replaces the mode's value (may be inf)
    bool use_derivative = true;
    int workers = 1;
    std::uint64_t seed = 0;

    double threshold_value() const {
        return threshold_override.value_or(threshold(mode));
    }
};

/// Columnar implausibility table: one row per candidate, one column per
/// (gauge, datatype) component, components ordered gauge-major with the
/// curve before the derivative.
struct ClassifyResult {
    std::vector<std::string> component_names;
    Eigen::MatrixXd dists;
    Eigen::MatrixXd emu_vars;
    Eigen::VectorXd shared_vars;
    Eigen::MatrixXd implausibilities;
    Eigen::VectorXd combined; // max over components
    std::vector<char> nroy;   // combined < threshold
    double threshold_value = 5.0;
};

/// Per-candidate view of one ClassifyResult row.
struct ImplausibilityRecord {
    Eigen::VectorXd theta;
    Eigen::VectorXd component_implausibilities;
    double combined = 0.0;
    bool nroy = false;
};

ClassifyResult classify(const Eigen::MatrixXd& candidates,
                        const std::vector<const OpeModel*>& models,
                        const std::vector<ObservedGauge>& observations,
                        const ProjectionEnsemble& ensemble, const CurveCodec& codec,
                        const ClassifyConfig& cfg);

std::vector<ImplausibilityRecord> make_records(const Eigen::MatrixXd& candidates,
                                               const ClassifyResult& result);

/// Recombines stored component scores over a subset of component columns,
/// e.g. to ask what the NROY set would have been without one gauge or
/// without the derivative filter.
struct Combination {
    Eigen::VectorXd combined;
    std::vector<char> nroy;
};
Combination combine_components(const ClassifyResult& result, const std::vector<int>& columns);

/// Scores one extra input (e.g. the twin truth) against the shared variances
/// of an existing classification.
ImplausibilityRecord score_point(const Eigen::VectorXd& theta,
                                 const std::vector<const OpeModel*>& models,
                                 const std::vector<ObservedGauge>& observations,
                                 const ProjectionEnsemble& ensemble, const CurveCodec& codec,
                                 const ClassifyResult& reference, const ClassifyConfig& cfg);

} // namespace fhm
