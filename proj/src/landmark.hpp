#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "curve.hpp"
#include "ope.hpp"

namespace fhm {

/// The four scalar curve features used by the baseline: global extrema
/// values and their (normalized) times.
struct LandmarkVector {
    double max_value = 0.0;
    double min_value = 0.0;
    double t_max = 0.0;
    double t_min = 0.0;
};

/// Global extrema over the grid, refined by local search on the spline
/// between neighboring grid points; ties keep the first occurrence.
LandmarkVector extract_landmarks(const FunctionalCurve& curve, const TimeGrid& grid);

struct LandmarkClassifyConfig {
    int posterior_samples = 50;
    int folds = 5;
    double target_frac = 0.05;
    double delta_scale = 1e-3;
    double threshold_value = 3.0; // scalar features are screened as unimodal
    /// Calibrate one shared variance per landmark type over the absolute
    /// errors pooled across gauges (rather than one per gauge and landmark).
    bool pool_across_gauges = true;
    int workers = 1;
    std::uint64_t seed = 0;
};

/// Scalar history matching over the landmark features: a candidate survives
/// only if every landmark at every gauge passes the threshold. Landmark
/// expectations and variances come from posterior curve samples; the shared
/// variance per (gauge, landmark) reuses the fold-calibrated estimator.
struct LandmarkClassifyResult {
    std::vector<std::string> component_names; // gauge x {max,min,t_max,t_min}
    Eigen::MatrixXd dists;
    Eigen::MatrixXd emu_vars;
    Eigen::VectorXd shared_vars;
    Eigen::MatrixXd implausibilities;
    Eigen::VectorXd combined;
    std::vector<char> nroy;
    double threshold_value = 3.0;
};

LandmarkClassifyResult landmark_classify(const Eigen::MatrixXd& candidates,
                                         const std::vector<const OpeModel*>& models,
                                         const std::vector<FunctionalCurve>& observations,
                                         const CurveCodec& codec,
                                         const LandmarkClassifyConfig& cfg);

/// Scores one extra input against the shared variances of an existing
/// landmark classification; returns whether it passes every landmark screen.
bool landmark_score_point(const Eigen::VectorXd& theta,
                          const std::vector<const OpeModel*>& models,
                          const std::vector<FunctionalCurve>& observations,
                          const CurveCodec& codec, const LandmarkClassifyResult& reference,
                          const LandmarkClassifyConfig& cfg);

} // namespace fhm
