#include "implausibility.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fhm {

double threshold(ThresholdMode mode) {
    return mode == ThresholdMode::unimodal ? 3.0 : 5.0;
}

ThresholdMode threshold_mode_from_string(const std::string& s) {
    if (s == "unimodal") return ThresholdMode::unimodal;
    if (s == "general") return ThresholdMode::general;
    throw ConfigError("unknown threshold mode '" + s + "' (expected unimodal or general)");
}

std::string to_string(ThresholdMode mode) {
    return mode == ThresholdMode::unimodal ? "unimodal" : "general";
}

double implausibility(double dist, double emu_var, double shared_var) {
    require(dist >= 0.0, "implausibility: distance must be nonnegative");
    require(emu_var >= 0.0 && shared_var >= 0.0, "implausibility: variances must be nonnegative");
    const double total = emu_var + shared_var;
    if (total <= 0.0) throw InvalidArgument("implausibility: zero total variance, ratio undefined");
    return dist / std::sqrt(total);
}

double estimate_shared_uncertainty(const Eigen::VectorXd& dists, const Eigen::VectorXd& emu_vars,
                                   int folds, double target_frac, double delta_step,
                                   double threshold_value, std::uint64_t seed) {
    const int n = static_cast<int>(dists.size());
    require(emu_vars.size() == n, "uncertainty: dists and emu_vars must align");
    require(folds >= 2 && n >= folds, "uncertainty: need n >= folds >= 2");
    require(target_frac > 0.0 && target_frac < 1.0, "uncertainty: target fraction must be in (0,1)");
    require(delta_step > 0.0, "uncertainty: step must be positive");
    require(threshold_value > 0.0, "uncertainty: threshold must be positive");
    require((dists.array() >= 0.0).all(), "uncertainty: distances must be nonnegative");
    require((emu_vars.array() >= 0.0).all(), "uncertainty: variances must be nonnegative");

    const double b = target_frac * static_cast<double>(n) * (folds - 1) / folds;
    if (b < 1.0) {
        throw InvalidArgument("uncertainty: target count below one member per fold complement");
    }
    const int b_count = static_cast<int>(std::ceil(b));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    // A member becomes NROY once a > dist^2/thr^2 - emu_var; the loop over
    // a = delta, 2*delta, ... therefore stops at the first multiple of delta
    // strictly above the b-th smallest crossing point.
    const double thr2 = threshold_value * threshold_value;
    double total = 0.0;
    std::vector<double> crossings;
    crossings.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < folds; ++j) {
        crossings.clear();
        for (int pos = 0; pos < n; ++pos) {
            if (pos % folds == j) continue; // held-out fold
            const int idx = order[static_cast<std::size_t>(pos)];
            crossings.push_back(dists[idx] * dists[idx] / thr2 - emu_vars[idx]);
        }
        require(static_cast<int>(crossings.size()) >= b_count,
                "uncertainty: fold complement smaller than the target count");
        std::nth_element(crossings.begin(), crossings.begin() + (b_count - 1), crossings.end());
        const double v = crossings[static_cast<std::size_t>(b_count - 1)];
        double steps = 1.0;
        if (v >= delta_step) steps = std::floor(v / delta_step) + 1.0;
        total += steps * delta_step;
    }
    return total / folds;
}

ObservedGauge make_observed(const std::string& name, const FunctionalCurve& curve,
                            const CurveCodec& codec) {
    ObservedGauge obs;
    obs.name = name;
    obs.curve_values = curve.on_grid(codec.grid());
    obs.deriv_values = curve.derivative().on_grid(codec.grid());
    return obs;
}

namespace {

double median_of(const Eigen::VectorXd& v) {
    std::vector<double> tmp(v.data(), v.data() + v.size());
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid), tmp.end());
    return tmp[mid];
}

/// Distance and sampled projection variance of one candidate against one
/// observation component.
void component_scores(const ProjectionEnsemble& ensemble, const Eigen::VectorXd& mean_values,
                      const Eigen::MatrixXd& fluct, const Eigen::VectorXd& observed,
                      double& dist, double& emu_var) {
    dist = ensemble.distance_values(mean_values, observed);
    Eigen::MatrixXd projected = ensemble.projection_operator() * fluct; // M x S
    projected.colwise() -= projected.rowwise().mean();
    const double denom =
        static_cast<double>(projected.rows()) * static_cast<double>(projected.cols() - 1);
    emu_var = projected.squaredNorm() / denom;
}

} // namespace

ClassifyResult classify(const Eigen::MatrixXd& candidates,
                        const std::vector<const OpeModel*>& models,
                        const std::vector<ObservedGauge>& observations,
                        const ProjectionEnsemble& ensemble, const CurveCodec& codec,
                        const ClassifyConfig& cfg) {
    const int n = static_cast<int>(candidates.rows());
    const int n_gauges = static_cast<int>(models.size());
    require(n >= 1, "classify: no candidates");
    require(n_gauges >= 1, "classify: no gauges");
    require(observations.size() == models.size(),
            "classify: need one observation per gauge model");
    for (int g = 0; g < n_gauges; ++g) {
        require(models[static_cast<std::size_t>(g)] != nullptr,
                "classify: missing model for gauge '" + observations[static_cast<std::size_t>(g)].name + "'");
        require(observations[static_cast<std::size_t>(g)].curve_values.size() == codec.grid().count(),
                "classify: observation grid mismatch for gauge '" +
                    observations[static_cast<std::size_t>(g)].name + "'");
    }
    require(cfg.posterior_samples >= 2, "classify: need at least 2 posterior samples");

    const int per_gauge = cfg.use_derivative ? 2 : 1;
    const int n_comp = n_gauges * per_gauge;

    ClassifyResult result;
    result.threshold_value = cfg.threshold_value();
    result.component_names.reserve(static_cast<std::size_t>(n_comp));
    for (int g = 0; g < n_gauges; ++g) {
        result.component_names.push_back(observations[static_cast<std::size_t>(g)].name + ":curve");
        if (cfg.use_derivative) {
            result.component_names.push_back(observations[static_cast<std::size_t>(g)].name + ":deriv");
        }
    }
    result.dists.resize(n, n_comp);
    result.emu_vars.resize(n, n_comp);

    const Eigen::MatrixXd& deriv_map = codec.derivative_map();
    parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i) {
        for (int g = 0; g < n_gauges; ++g) {
            const OpeModel& model = *models[static_cast<std::size_t>(g)];
            const auto pred = model.predictive(candidates.row(static_cast<Eigen::Index>(i)).transpose());
            Rng rng(derive_seed(cfg.seed, {0xA11CEu, static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(g)}));
            const Eigen::MatrixXd fluct = model.sample_fluctuations(pred, cfg.posterior_samples, rng);

            const int c0 = g * per_gauge;
            double dist = 0.0, emu = 0.0;
            component_scores(ensemble, pred.mean, fluct,
                             observations[static_cast<std::size_t>(g)].curve_values, dist, emu);
            result.dists(static_cast<Eigen::Index>(i), c0) = dist;
            result.emu_vars(static_cast<Eigen::Index>(i), c0) = emu;
            if (cfg.use_derivative) {
                component_scores(ensemble, deriv_map * pred.mean, deriv_map * fluct,
                                 observations[static_cast<std::size_t>(g)].deriv_values, dist, emu);
                result.dists(static_cast<Eigen::Index>(i), c0 + 1) = dist;
                result.emu_vars(static_cast<Eigen::Index>(i), c0 + 1) = emu;
            }
        }
    });

    result.shared_vars.resize(n_comp);
    for (int c = 0; c < n_comp; ++c) {
        double scale = median_of(result.dists.col(c));
        if (scale <= 0.0) scale = result.dists.col(c).cwiseAbs().maxCoeff();
        if (scale <= 0.0 || result.threshold_value <= 0.0) {
            result.shared_vars[c] = 0.0; // nothing to calibrate against
            continue;
        }
        result.shared_vars[c] = estimate_shared_uncertainty(
            result.dists.col(c), result.emu_vars.col(c), cfg.folds, cfg.target_frac,
            cfg.delta_scale * scale, result.threshold_value,
            derive_seed(cfg.seed, {0xF01D5u, static_cast<std::uint64_t>(c)}));
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

std::vector<ImplausibilityRecord> make_records(const Eigen::MatrixXd& candidates,
                                               const ClassifyResult& result) {
    require(candidates.rows() == result.combined.size(), "records: row count mismatch");
    std::vector<ImplausibilityRecord> records(static_cast<std::size_t>(candidates.rows()));
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        auto& rec = records[static_cast<std::size_t>(i)];
        rec.theta = candidates.row(i).transpose();
        rec.component_implausibilities = result.implausibilities.row(i).transpose();
        rec.combined = result.combined[i];
        rec.nroy = result.nroy[static_cast<std::size_t>(i)] != 0;
    }
    return records;
}

Combination combine_components(const ClassifyResult& result, const std::vector<int>& columns) {
    require(!columns.empty(), "combine: need at least one component column");
    const int n = static_cast<int>(result.combined.size());
    Combination out;
    out.combined = Eigen::VectorXd::Constant(n, -1.0);
    for (int c : columns) {
        require(c >= 0 && c < result.implausibilities.cols(),
                "combine: component column out of range");
        out.combined = out.combined.cwiseMax(result.implausibilities.col(c));
    }
    out.nroy.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.nroy[static_cast<std::size_t>(i)] = out.combined[i] < result.threshold_value;
    }
    return out;
}

ImplausibilityRecord score_point(const Eigen::VectorXd& theta,
                                 const std::vector<const OpeModel*>& models,
                                 const std::vector<ObservedGauge>& observations,
                                 const ProjectionEnsemble& ensemble, const CurveCodec& codec,
                                 const ClassifyResult& reference, const ClassifyConfig& cfg) {
    const int n_gauges = static_cast<int>(models.size());
    const int per_gauge = cfg.use_derivative ? 2 : 1;
    require(reference.shared_vars.size() == n_gauges * per_gauge,
            "score_point: reference component count mismatch");

    ImplausibilityRecord rec;
    rec.theta = theta;
    rec.component_implausibilities.resize(n_gauges * per_gauge);
    const Eigen::MatrixXd& deriv_map = codec.derivative_map();
    for (int g = 0; g < n_gauges; ++g) {
        const OpeModel& model = *models[static_cast<std::size_t>(g)];
        const auto pred = model.predictive(theta);
        Rng rng(derive_seed(cfg.seed, {0x9017u, static_cast<std::uint64_t>(g)}));
        const Eigen::MatrixXd fluct = model.sample_fluctuations(pred, cfg.posterior_samples, rng);
        const int c0 = g * per_gauge;
        double dist = 0.0, emu = 0.0;
        component_scores(ensemble, pred.mean, fluct,
                         observations[static_cast<std::size_t>(g)].curve_values, dist, emu);
        rec.component_implausibilities[c0] = implausibility(dist, emu, reference.shared_vars[c0]);
        if (cfg.use_derivative) {
            component_scores(ensemble, deriv_map * pred.mean, deriv_map * fluct,
                             observations[static_cast<std::size_t>(g)].deriv_values, dist, emu);
            rec.component_implausibilities[c0 + 1] =
                implausibility(dist, emu, reference.shared_vars[c0 + 1]);
        }
    }
    rec.combined = rec.component_implausibilities.maxCoeff();
    rec.nroy = rec.combined < reference.threshold_value;
    return rec;
}

} // namespace fhm
