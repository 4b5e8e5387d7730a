#include "waves.hpp"

#include <algorithm>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace fhm {

void WaveConfig::validate() const {
    require(index >= 1, "wave: index must be >= 1");
    require(design_size >= 1, "wave: design size must be positive");
    require(candidate_count >= design_size, "wave: candidate count must be >= design size");
    require(!gauges.empty(), "wave: at least one screening gauge required");
    require(posterior_samples >= 2, "wave: need at least 2 posterior samples");
    require(projection_count >= 1, "wave: projection count must be positive");
}

std::uint64_t WaveConfig::design_seed() const {
    return derive_seed(seed, {0xD351u, static_cast<std::uint64_t>(index)});
}
std::uint64_t WaveConfig::candidate_seed() const {
    return derive_seed(seed, {0xCA4Du, static_cast<std::uint64_t>(index)});
}
std::uint64_t WaveConfig::projection_seed() const {
    return derive_seed(seed, {0x9207u, static_cast<std::uint64_t>(index)});
}
std::uint64_t WaveConfig::classify_seed() const {
    return derive_seed(seed, {0xC1A5u, static_cast<std::uint64_t>(index)});
}

int WaveResult::gauge_index(const std::string& name) const {
    const auto it = std::find(ensemble_gauges.begin(), ensemble_gauges.end(), name);
    require(it != ensemble_gauges.end(), "wave: gauge '" + name + "' not in the ensemble");
    return static_cast<int>(it - ensemble_gauges.begin());
}

namespace {

Eigen::MatrixXd gauge_outputs(const WaveResult& result, int gauge_idx, const TimeGrid& grid) {
    Eigen::MatrixXd y(result.ensemble.rows, grid.count());
    for (int i = 0; i < result.ensemble.rows; ++i) {
        y.row(i) = result.ensemble.at(i, gauge_idx).on_grid(grid).transpose();
    }
    return y;
}

OpeModel train_for_gauge(const WaveResult& result, int gauge_idx, const CurveCodec& codec) {
    const Eigen::MatrixXd y = gauge_outputs(result, gauge_idx, codec.grid());
    const RegressorSet reg(result.space.size());
    const NigPrior prior = NigPrior::weakly_informative(reg.count());
    const CovarianceHyper hyper =
        OpeModel::fit_hyper(result.space, result.design.points, codec.grid(), y, prior,
                            result.config.emulator_jitter);
    return OpeModel::train(result.space, result.design.points, codec.grid(), y, hyper, prior);
}

} // namespace

WaveResult run_wave(const ParameterSpace& space, const Scenario& scenario,
                    const WaveConfig& config,
                    const std::map<std::string, FunctionalCurve>& observations,
                    const CurveCodec& codec) {
    config.validate();
    for (const auto& name : config.gauges) {
        require(scenario.has_gauge(name), "wave: screening gauge '" + name + "' not in scenario");
        if (observations.find(name) == observations.end()) {
            throw MissingDependency("wave: missing observation for gauge '" + name + "'");
        }
    }

    WaveResult result;
    result.config = config;
    result.space = space;
    result.next_box = space;

    result.design = latin_hypercube(space, config.design_size, config.design_seed());
    result.ensemble_gauges.reserve(scenario.gauges.size());
    for (const auto& g : scenario.gauges) result.ensemble_gauges.push_back(g.name);
    result.ensemble = run_ensemble(result.design, scenario.gauges, codec, scenario.wave_speed,
                                   config.workers);

    for (const auto& name : config.gauges) {
        result.models.emplace(name, train_for_gauge(result, result.gauge_index(name), codec));
    }

    result.candidates =
        latin_hypercube(space, config.candidate_count, config.candidate_seed()).points;
    result.projection =
        ProjectionEnsemble::generate(codec.grid(), config.projection_count,
                                     config.projection_seed());

    std::vector<const OpeModel*> model_ptrs;
    for (const auto& name : config.gauges) {
        model_ptrs.push_back(&result.models.at(name));
        result.screening_obs.push_back(make_observed(name, observations.at(name), codec));
    }

    ClassifyConfig ccfg;
    ccfg.posterior_samples = config.posterior_samples;
    ccfg.folds = config.folds;
    ccfg.target_frac = config.target_frac;
    ccfg.delta_scale = config.delta_scale;
    ccfg.mode = config.mode;
    ccfg.threshold_override = config.threshold_override;
    ccfg.use_derivative = config.use_derivative;
    ccfg.workers = config.workers;
    ccfg.seed = config.classify_seed();
    result.classification = classify(result.candidates, model_ptrs, result.screening_obs,
                                     *result.projection, codec, ccfg);

    const int n_nroy = static_cast<int>(
        std::count(result.classification.nroy.begin(), result.classification.nroy.end(), char(1)));
    if (n_nroy == 0) {
        result.all_ruled_out = true;
        result.nroy_points.resize(0, space.size());
        return result;
    }
    result.nroy_points.resize(n_nroy, space.size());
    int r = 0;
    for (int i = 0; i < static_cast<int>(result.classification.nroy.size()); ++i) {
        if (result.classification.nroy[static_cast<std::size_t>(i)]) {
            result.nroy_points.row(r++) = result.candidates.row(i);
        }
    }
    result.next_box = intersect(bounding_box(space, result.nroy_points), space);
    return result;
}

ParameterSpace next_space(const WaveResult& result) {
    if (result.all_ruled_out || result.nroy_points.rows() == 0) {
        throw InvalidArgument(
            "next_space: NROY set is empty; revisit the uncertainty specification before refining");
    }
    return result.next_box;
}

const OpeModel& ensure_gauge_model(WaveResult& result, const std::string& gauge,
                                   const CurveCodec& codec) {
    const auto it = result.models.find(gauge);
    if (it != result.models.end()) return it->second;
    const int idx = result.gauge_index(gauge);
    return result.models.emplace(gauge, train_for_gauge(result, idx, codec)).first->second;
}

std::vector<FunctionalCurve> forecast(const WaveResult& result, const OpeModel& target_model,
                                      const CurveCodec& codec) {
    require(target_model.design().rows() == result.design.points.rows() &&
                target_model.design().cols() == result.design.points.cols() &&
                target_model.design().isApprox(result.design.points),
            "forecast: target model was not trained on this wave's design");
    const int n = static_cast<int>(result.nroy_points.rows());
    std::vector<FunctionalCurve> curves;
    if (n == 0) return curves; // empty NROY: empty forecast set
    const FunctionalCurve blank(codec.basis(), Eigen::VectorXd::Zero(codec.basis()->size()));
    curves.assign(static_cast<std::size_t>(n), blank);
    parallel_for(static_cast<std::size_t>(n), result.config.workers, [&](std::size_t i) {
        curves[i] = target_model.predict_mean_curve(
            result.nroy_points.row(static_cast<Eigen::Index>(i)).transpose(), codec);
    });
    return curves;
}

Eigen::MatrixXd curves_to_matrix(const std::vector<FunctionalCurve>& curves, const TimeGrid& grid) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(curves.size()), grid.count());
    for (std::size_t i = 0; i < curves.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = curves[i].on_grid(grid).transpose();
    }
    return m;
}

} // namespace fhm
