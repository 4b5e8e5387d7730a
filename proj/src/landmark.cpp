#include "landmark.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "implausibility.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fhm {

namespace {

/// Golden-section maximizer of sign*curve on [lo, hi]; returns the raw curve
/// value at the located point.
double refine_extremum(const FunctionalCurve& curve, double lo, double hi, double sign,
                       double& best_t) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = sign * curve(c);
    double fd = sign * curve(d);
    for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = sign * curve(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = sign * curve(d);
        }
    }
    best_t = 0.5 * (a + b);
    return curve(best_t);
}

void locate(const FunctionalCurve& curve, const TimeGrid& grid, const Eigen::VectorXd& values,
            double sign, double& value, double& t) {
    // First grid point attaining the extremum, with near-ties (float wiggle
    // on flat stretches) collapsed onto the earliest occurrence.
    double best_signed = sign * values[0];
    for (int i = 1; i < grid.count(); ++i) best_signed = std::max(best_signed, sign * values[i]);
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(best_signed));
    int best = 0;
    while (sign * values[best] < best_signed - tie_tol) ++best;
    value = values[best];
    t = grid.point(best);
    const double lo = grid.point(std::max(0, best - 1));
    const double hi = grid.point(std::min(grid.count() - 1, best + 1));
    if (hi > lo) {
        double refined_t = t;
        const double refined = refine_extremum(curve, lo, hi, sign, refined_t);
        if (sign * refined > sign * value + tie_tol) {
            value = refined;
            t = refined_t;
        }
    }
}

LandmarkVector landmarks_from_values(const FunctionalCurve& curve, const TimeGrid& grid,
                                     const Eigen::VectorXd& values) {
    LandmarkVector lm;
    locate(curve, grid, values, +1.0, lm.max_value, lm.t_max);
    locate(curve, grid, values, -1.0, lm.min_value, lm.t_min);
    return lm;
}

double median_of(Eigen::VectorXd v) {
    std::vector<double> tmp(v.data(), v.data() + v.size());
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid), tmp.end());
    return tmp[mid];
}

constexpr int kLandmarksPerGauge = 4;

/// Sampled landmark moments of one candidate at one gauge: absolute errors
/// against the observed landmarks and per-landmark sample variances.
void landmark_stats(const OpeModel& model, const Eigen::VectorXd& theta,
                    const Eigen::RowVectorXd& observed_row, const CurveCodec& codec, int s_count,
                    std::uint64_t seed, Eigen::RowVectorXd& dists, Eigen::RowVectorXd& vars) {
    const auto pred = model.predictive(theta);
    Rng rng(seed);
    const Eigen::MatrixXd fluct = model.sample_fluctuations(pred, s_count, rng);
    Eigen::MatrixXd sample_lms(s_count, kLandmarksPerGauge);
    for (int s = 0; s < s_count; ++s) {
        const FunctionalCurve curve = codec.fit(pred.mean + fluct.col(s));
        const LandmarkVector lm =
            landmarks_from_values(curve, codec.grid(), curve.on_grid(codec.grid()));
        sample_lms.row(s) << lm.max_value, lm.min_value, lm.t_max, lm.t_min;
    }
    const Eigen::RowVectorXd mean = sample_lms.colwise().mean();
    vars = (sample_lms.rowwise() - mean).colwise().squaredNorm() / (s_count - 1);
    dists = (observed_row - mean).cwiseAbs();
}

} // namespace

LandmarkVector extract_landmarks(const FunctionalCurve& curve, const TimeGrid& grid) {
    return landmarks_from_values(curve, grid, curve.on_grid(grid));
}

LandmarkClassifyResult landmark_classify(const Eigen::MatrixXd& candidates,
                                         const std::vector<const OpeModel*>& models,
                                         const std::vector<FunctionalCurve>& observations,
                                         const CurveCodec& codec,
                                         const LandmarkClassifyConfig& cfg) {
    const int n = static_cast<int>(candidates.rows());
    const int n_gauges = static_cast<int>(models.size());
    require(n >= 1, "landmark: no candidates");
    require(n_gauges >= 1 && observations.size() == models.size(),
            "landmark: need one observation per gauge model");
    require(cfg.posterior_samples >= 2, "landmark: need at least 2 posterior samples");

    constexpr int kPerGauge = kLandmarksPerGauge;
    const int n_comp = n_gauges * kPerGauge;
    static const char* kNames[kPerGauge] = {"max", "min", "t_max", "t_min"};

    LandmarkClassifyResult result;
    result.threshold_value = cfg.threshold_value;
    for (int g = 0; g < n_gauges; ++g) {
        for (int l = 0; l < kPerGauge; ++l) {
            result.component_names.push_back("gauge" + std::to_string(g) + ":" + kNames[l]);
        }
    }

    Eigen::MatrixXd observed(n_gauges, kPerGauge);
    for (int g = 0; g < n_gauges; ++g) {
        const LandmarkVector lm = extract_landmarks(observations[static_cast<std::size_t>(g)],
                                                    codec.grid());
        observed.row(g) << lm.max_value, lm.min_value, lm.t_max, lm.t_min;
    }

    result.dists.resize(n, n_comp);
    result.emu_vars.resize(n, n_comp);
    parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i) {
        Eigen::RowVectorXd dists(kPerGauge), vars(kPerGauge);
        for (int g = 0; g < n_gauges; ++g) {
            landmark_stats(*models[static_cast<std::size_t>(g)],
                           candidates.row(static_cast<Eigen::Index>(i)).transpose(),
                           observed.row(g), codec, cfg.posterior_samples,
                           derive_seed(cfg.seed, {0x1A2DBu, static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(g)}),
                           dists, vars);
            result.dists.block(static_cast<Eigen::Index>(i), g * kPerGauge, 1, kPerGauge) = dists;
            result.emu_vars.block(static_cast<Eigen::Index>(i), g * kPerGauge, 1, kPerGauge) =
                vars;
        }
    });

    result.shared_vars.resize(n_comp);
    if (cfg.pool_across_gauges) {
        // One shared variance per landmark type, calibrated on the absolute
        // errors pooled over all gauges (landmark units are gauge-independent).
        for (int l = 0; l < kPerGauge; ++l) {
            Eigen::VectorXd pooled_d(n * n_gauges), pooled_e(n * n_gauges);
            for (int g = 0; g < n_gauges; ++g) {
                pooled_d.segment(g * n, n) = result.dists.col(g * kPerGauge + l);
                pooled_e.segment(g * n, n) = result.emu_vars.col(g * kPerGauge + l);
            }
            double scale = median_of(pooled_d);
            if (scale <= 0.0) scale = pooled_d.maxCoeff();
            double shared = 0.0;
            if (scale > 0.0) {
                shared = estimate_shared_uncertainty(
                    pooled_d, pooled_e, cfg.folds, cfg.target_frac, cfg.delta_scale * scale,
                    cfg.threshold_value,
                    derive_seed(cfg.seed, {0x1A2DFu, static_cast<std::uint64_t>(l)}));
            }
            for (int g = 0; g < n_gauges; ++g) result.shared_vars[g * kPerGauge + l] = shared;
        }
    } else {
        for (int c = 0; c < n_comp; ++c) {
            double scale = median_of(result.dists.col(c));
            if (scale <= 0.0) scale = result.dists.col(c).maxCoeff();
            if (scale <= 0.0) {
                result.shared_vars[c] = 0.0;
                continue;
            }
            result.shared_vars[c] = estimate_shared_uncertainty(
                result.dists.col(c), result.emu_vars.col(c), cfg.folds, cfg.target_frac,
                cfg.delta_scale * scale, cfg.threshold_value,
                derive_seed(cfg.seed, {0x1A2DFu, static_cast<std::uint64_t>(c)}));
        }
    }

    result.implausibilities.resize(n, n_comp);
    for (int c = 0; c < n_comp; ++c) {
        for (int i = 0; i < n; ++i) {
            result.implausibilities(i, c) =
                implausibility(result.dists(i, c), result.emu_vars(i, c), result.shared_vars[c]);
        }
    }
    result.combined = result.implausibilities.rowwise().maxCoeff();
    result.nroy.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        result.nroy[static_cast<std::size_t>(i)] = result.combined[i] < result.threshold_value;
    }
    return result;
}


bool landmark_score_point(const Eigen::VectorXd& theta,
                          const std::vector<const OpeModel*>& models,
                          const std::vector<FunctionalCurve>& observations,
                          const CurveCodec& codec, const LandmarkClassifyResult& reference,
                          const LandmarkClassifyConfig& cfg) {
    const int n_gauges = static_cast<int>(models.size());
    require(reference.shared_vars.size() == n_gauges * kLandmarksPerGauge,
            "landmark: reference component count mismatch");
    Eigen::RowVectorXd dists(kLandmarksPerGauge), vars(kLandmarksPerGauge);
    for (int g = 0; g < n_gauges; ++g) {
        const LandmarkVector lm =
            extract_landmarks(observations[static_cast<std::size_t>(g)], codec.grid());
        Eigen::RowVectorXd observed_row(kLandmarksPerGauge);
        observed_row << lm.max_value, lm.min_value, lm.t_max, lm.t_min;
        landmark_stats(*models[static_cast<std::size_t>(g)], theta, observed_row, codec,
                       cfg.posterior_samples,
                       derive_seed(cfg.seed, {0x1A2DCu, static_cast<std::uint64_t>(g)}), dists,
                       vars);
        for (int l = 0; l < kLandmarksPerGauge; ++l) {
            const int c = g * kLandmarksPerGauge + l;
            if (implausibility(dists[l], vars[l], reference.shared_vars[c]) >=
                reference.threshold_value) {
                return false;
            }
        }
    }
    return true;
}

} // namespace fhm
