#include "pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "json_util.hpp"
#include "landmark.hpp"
#include "parallel.hpp"
#include "reporting.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace fhm {

namespace {

constexpr double kFractionLo = 0.01;
constexpr double kFractionHi = 0.15;
constexpr double kContainmentTarget = 0.95;

std::string sanitize(std::string s) {
    for (auto& c : s) {
        if (c == ':') c = '_';
    }
    return s;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_points_csv(const std::string& path, const ParameterSpace& space,
                      const Eigen::MatrixXd& points, const std::string& provenance,
                      bool with_id) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "# " << provenance << "\n";
    if (with_id) out << "candidate_id";
    for (int j = 0; j < space.size(); ++j) {
        if (with_id || j > 0) out << ",";
        out << space.dim(j).name;
    }
    out << "\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (with_id) out << i;
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (with_id || j > 0) out << ",";
            out << points(i, j);
        }
        out << "\n";
    }
}

Eigen::MatrixXd read_points_csv(const std::string& path, int dims, bool with_id) {
    std::ifstream in(path);
    if (!in) throw MissingDependency("missing artifact: " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        const std::size_t expect = static_cast<std::size_t>(dims) + (with_id ? 1 : 0);
        if (vals.size() != expect) throw IoError("malformed row in " + path);
        if (with_id) vals.erase(vals.begin());
        rows.push_back(std::move(vals));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), dims);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < dims; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
    return m;
}

struct TimingRow {
    std::string stage;
    int count = 0;
    double mean_s = 0.0;
    double std_s = 0.0;
};

TimingRow time_repeat(const std::string& stage, int reps, const std::function<void()>& body) {
    TimingRow row;
    row.stage = stage;
    row.count = reps;
    std::vector<double> samples(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        samples[static_cast<std::size_t>(r)] = std::chrono::duration<double>(t1 - t0).count();
    }
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= reps;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    row.mean_s = mean;
    row.std_s = reps > 1 ? std::sqrt(var / (reps - 1)) : 0.0;
    return row;
}

void write_timings_csv(const std::string& path, const std::vector<TimingRow>& rows,
                       const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(9);
    out << "# " << provenance << "\n";
    out << "stage,count,mean_seconds,std_seconds\n";
    for (const auto& r : rows) {
        out << r.stage << "," << r.count << "," << r.mean_s << "," << r.std_s << "\n";
    }
}

} // namespace

nlohmann::json TwinReport::to_json() const {
    nlohmann::json j;
    j["waves"] = waves;
    j["nroy_fractions"] = nroy_fractions;
    j["nroy_counts"] = nroy_counts;
    j["curve_only_counts"] = curve_only_counts;
    j["truth_nroy"] = truth_nroy;
    j["truth_in_box"] = truth_in_box;
    j["checks"] = {{"nesting", nesting_ok},
                   {"volume_monotone", volume_monotone_ok},
                   {"fraction_in_band", fraction_ok},
                   {"derivative_filter", derivative_filter_ok},
                   {"truth_recovered", truth_ok},
                   {"virtual_gauge", virtual_ok},
                   {"forecast_area", area_ok},
                   {"forecast_containment", containment_ok}};
    j["virtual_present"] = virtual_present;
    j["nroy_with_virtual"] = nroy_with_virtual;
    j["nroy_without_virtual"] = nroy_without_virtual;
    j["fhm_forecast_count"] = fhm_forecast_count;
    j["landmark_forecast_count"] = landmark_forecast_count;
    j["landmark_truth_nroy"] = landmark_truth_nroy;
    j["fhm_area"] = fhm_area;
    j["landmark_area"] = landmark_area;
    j["fhm_containment"] = fhm_containment;
    j["pass"] = pass;
    return j;
}

std::string TwinReport::summary_lines() const {
    std::ostringstream out;
    const auto line = [&](const std::string& name, bool ok, const std::string& detail) {
        out << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out << " (" << detail << ")";
        out << "\n";
    };
    std::ostringstream frac;
    frac.precision(4);
    for (std::size_t i = 0; i < nroy_fractions.size(); ++i) {
        if (i) frac << ", ";
        frac << "wave " << (i + 1) << ": " << 100.0 * nroy_fractions[i] << "%";
    }
    bool truth_all = !truth_nroy.empty();
    for (bool b : truth_nroy) truth_all = truth_all && b;
    for (bool b : truth_in_box) truth_all = truth_all && b;
    line("truth in NROY and refined boxes", truth_all, "");
    line("box nesting", nesting_ok && volume_monotone_ok, "");
    line("NROY fraction in [1%, 15%]", fraction_ok, frac.str());
    line("derivative filter never enlarges NROY", derivative_filter_ok, "");
    if (virtual_present) {
        line("virtual gauge never enlarges NROY", virtual_ok,
             std::to_string(nroy_without_virtual) + " -> " + std::to_string(nroy_with_virtual));
    }
    {
        std::ostringstream d;
        d.precision(4);
        d << "fhm " << fhm_area << " vs landmark " << landmark_area;
        line("FHM forecast envelope tighter than landmark", area_ok, d.str());
    }
    {
        std::ostringstream d;
        d.precision(4);
        d << 100.0 * fhm_containment << "% of grid points";
        line("true curve inside FHM forecast envelope", containment_ok, d.str());
    }
    out << (pass ? "TWIN PASS" : "TWIN FAIL") << "\n";
    return out.str();
}

Pipeline::Pipeline(RunConfig cfg)
    : cfg_(std::move(cfg)),
      codec_(cfg_.scenario.make_grid(), BSplineBasis::cubic_default(), kDefaultPenalty) {
    cfg_.validate();
}

std::string Pipeline::wave_dir(int wave_index) const {
    return (fs::path(cfg_.out_dir) / ("wave_" + std::to_string(wave_index))).string();
}

std::map<std::string, FunctionalCurve> Pipeline::observations() const {
    std::map<std::string, FunctionalCurve> obs;
    if (cfg_.truth.has_value()) {
        const SourceParams truth = SourceParams::from_vector(*cfg_.truth);
        for (const auto& g : cfg_.scenario.gauges) {
            obs.emplace(g.name, fhm::simulate(truth, g, codec_, cfg_.scenario.wave_speed));
        }
        return obs;
    }
    for (const auto& [gauge, path] : cfg_.observation_paths) {
        const GaugeSeries series = read_gauge_csv(path);
        // Samples on the shared grid are fitted directly; anything else goes
        // through the scattered penalized fit.
        bool on_grid = static_cast<int>(series.samples.size()) == codec_.grid().count();
        if (on_grid) {
            for (std::size_t i = 0; i < series.samples.size(); ++i) {
                if (std::abs(series.samples[i].first - codec_.grid().point(static_cast<int>(i))) >
                    1e-9) {
                    on_grid = false;
                    break;
                }
            }
        }
        if (on_grid) {
            Eigen::VectorXd values(codec_.grid().count());
            for (std::size_t i = 0; i < series.samples.size(); ++i) {
                values[static_cast<Eigen::Index>(i)] = series.samples[i].second;
            }
            obs.emplace(gauge, codec_.fit(values));
        } else {
            obs.emplace(gauge, fit_curve(series.samples, codec_.basis(), kDefaultPenalty));
        }
    }
    return obs;
}

ParameterSpace Pipeline::wave_space(int wave_index) const {
    if (wave_index <= 1) return *cfg_.space;
    const std::string prev = (fs::path(wave_dir(wave_index - 1)) / "result.json").string();
    if (!fs::exists(prev)) {
        throw MissingDependency("wave " + std::to_string(wave_index) +
                                " needs the previous wave result: " + prev);
    }
    const nlohmann::json j = read_json_file(prev);
    if (j.value("all_ruled_out", false)) {
        throw InvalidArgument("previous wave ruled out every candidate; cannot refine further");
    }
    return ParameterSpace::from_json(j.at("next_box"));
}

int Pipeline::last_completed_wave() const {
    int last = 0;
    for (int w = 1; w <= cfg_.wave_count(); ++w) {
        if (fs::exists(fs::path(wave_dir(w)) / "result.json")) last = w;
    }
    if (last == 0) {
        throw MissingDependency("no completed wave found under " + cfg_.out_dir +
                                " (run the wave stage first)");
    }
    return last;
}

namespace {

/// Shared writers so that stage-wise runs and the in-process twin produce
/// identical artifacts.

void write_design_artifacts(const std::string& dir, const RunConfig& cfg,
                            const WaveResult& result, const CurveCodec& codec,
                            const Scenario& scenario) {
    fs::create_directories(fs::path(dir) / "ensemble");
    write_points_csv((fs::path(dir) / "design.csv").string(), result.space, result.design.points,
                     cfg.provenance() + " seed_design=" + std::to_string(result.config.design_seed()),
                     false);
    nlohmann::json manifest = {
        {"format", "fhm-ensemble"},
        {"wave", result.config.index},
        {"config_hash", cfg.config_hash},
        {"rows", result.ensemble.rows},
        {"gauges", result.ensemble_gauges},
        {"file_pattern", "<gauge>_r<row>.csv"},
        {"seeds", {{"design", result.config.design_seed()}}}};
    write_json_file((fs::path(dir) / "ensemble" / "manifest.json").string(), manifest);
    std::vector<double> times(static_cast<std::size_t>(codec.grid().count()));
    for (int g = 0; g < result.ensemble.gauges; ++g) {
        const Gauge& gauge = scenario.gauge(result.ensemble_gauges[static_cast<std::size_t>(g)]);
        for (std::size_t i = 0; i < times.size(); ++i) {
            times[i] = gauge.t_start +
                       codec.grid().point(static_cast<int>(i)) * (gauge.t_end - gauge.t_start);
        }
        for (int r = 0; r < result.ensemble.rows; ++r) {
            const std::string path =
                (fs::path(dir) / "ensemble" / (gauge.name + "_r" + std::to_string(r) + ".csv"))
                    .string();
            write_gauge_csv(path, times, result.ensemble.at(r, g).on_grid(codec.grid()),
                            cfg.provenance());
        }
    }
}

void write_model_artifacts(const std::string& dir, const RunConfig& cfg,
                           const WaveResult& result) {
    fs::create_directories(fs::path(dir) / "models");
    for (const auto& [name, model] : result.models) {
        nlohmann::json j = model.to_json();
        j["provenance"] = cfg.provenance();
        write_json_file((fs::path(dir) / "models" / ("model_" + name + ".json")).string(), j);
    }
}

void write_screening_artifacts(const std::string& dir, const RunConfig& cfg,
                               const WaveResult& result,
                               const ImplausibilityRecord* truth_score) {
    const auto& cls = result.classification;
    {
        std::ofstream out(fs::path(dir) / "implausibility.csv");
        if (!out) throw IoError("cannot write implausibility.csv");
        out.precision(17);
        out << "# " << cfg.provenance() << "\n";
        out << "candidate_id";
        for (int j = 0; j < result.space.size(); ++j) out << "," << result.space.dim(j).name;
        for (const auto& name : cls.component_names) out << ",I_" << sanitize(name);
        out << ",I_max,nroy\n";
        for (Eigen::Index i = 0; i < result.candidates.rows(); ++i) {
            out << i;
            for (Eigen::Index j = 0; j < result.candidates.cols(); ++j) {
                out << "," << result.candidates(i, j);
            }
            for (Eigen::Index c = 0; c < cls.implausibilities.cols(); ++c) {
                out << "," << cls.implausibilities(i, c);
            }
            out << "," << cls.combined[i] << ","
                << (cls.nroy[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";
        }
    }
    write_points_csv((fs::path(dir) / "nroy.csv").string(), result.space, result.nroy_points,
                     cfg.provenance(), true);

    // curve-only count for the derivative-filter comparison
    std::vector<int> curve_cols;
    const int per_gauge = result.config.use_derivative ? 2 : 1;
    for (int g = 0; g < static_cast<int>(result.config.gauges.size()); ++g) {
        curve_cols.push_back(g * per_gauge);
    }
    const Combination curve_only = combine_components(cls, curve_cols);
    const int curve_only_count =
        static_cast<int>(std::count(curve_only.nroy.begin(), curve_only.nroy.end(), char(1)));
    const int nroy_count = static_cast<int>(result.nroy_points.rows());

    nlohmann::json shared = nlohmann::json::object();
    for (std::size_t c = 0; c < cls.component_names.size(); ++c) {
        shared[cls.component_names[c]] = cls.shared_vars[static_cast<Eigen::Index>(c)];
    }
    nlohmann::json j = {
        {"format", "fhm-wave-result"},
        {"wave", result.config.index},
        {"config_hash", cfg.config_hash},
        {"seed", cfg.seed},
        {"seeds",
         {{"design", result.config.design_seed()},
          {"candidates", result.config.candidate_seed()},
          {"projection", result.config.projection_seed()},
          {"classify", result.config.classify_seed()}}},
        {"gauges", result.config.gauges},
        {"threshold", cls.threshold_value},
        {"threshold_mode", to_string(result.config.mode)},
        {"use_derivative", result.config.use_derivative},
        {"box", result.space.to_json()},
        {"next_box", result.next_box.to_json()},
        {"counts",
         {{"candidates", static_cast<int>(result.candidates.rows())},
          {"nroy", nroy_count},
          {"curve_only_nroy", curve_only_count}}},
        {"nroy_fraction",
         static_cast<double>(nroy_count) / static_cast<double>(result.candidates.rows())},
        {"shared_vars", shared},
        {"all_ruled_out", result.all_ruled_out}};
    if (result.all_ruled_out) {
        j["guidance"] =
            "every candidate was ruled out; revisit the uncertainty specification "
            "(shared variance, threshold mode) or the observation inputs before refining";
    }
    if (truth_score != nullptr) {
        j["truth_check"] = {{"combined", truth_score->combined},
                            {"nroy", truth_score->nroy},
                            {"in_next_box", result.next_box.contains(truth_score->theta)}};
    }
    write_json_file((fs::path(dir) / "result.json").string(), j);
}

Eigen::MatrixXd load_gauge_ensemble(const std::string& dir, const std::string& gauge, int rows,
                                    const CurveCodec& codec) {
    Eigen::MatrixXd y(rows, codec.grid().count());
    for (int r = 0; r < rows; ++r) {
        const std::string path =
            (fs::path(dir) / "ensemble" / (gauge + "_r" + std::to_string(r) + ".csv")).string();
        if (!fs::exists(path)) throw MissingDependency("missing artifact: " + path);
        const GaugeSeries series = read_gauge_csv(path);
        if (static_cast<int>(series.samples.size()) != codec.grid().count()) {
            throw IoError("ensemble CSV sample count does not match the grid: " + path);
        }
        for (std::size_t i = 0; i < series.samples.size(); ++i) {
            y(r, static_cast<Eigen::Index>(i)) = series.samples[i].second;
        }
    }
    return y;
}

OpeModel train_gauge_from_disk(const std::string& dir, const RunConfig& cfg,
                               const ParameterSpace& space, const std::string& gauge,
                               const CurveCodec& codec) {
    const Eigen::MatrixXd design = read_points_csv((fs::path(dir) / "design.csv").string(),
                                                   space.size(), false);
    if (design.rows() == 0) throw MissingDependency("empty design.csv under " + dir);
    const Eigen::MatrixXd raw =
        load_gauge_ensemble(dir, gauge, static_cast<int>(design.rows()), codec);
    // Smooth once through the shared basis, as the in-memory path does.
    Eigen::MatrixXd y(raw.rows(), raw.cols());
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        y.row(r) = codec.fit(raw.row(r).transpose()).on_grid(codec.grid()).transpose();
    }
    const RegressorSet reg(space.size());
    const NigPrior prior = NigPrior::weakly_informative(reg.count());
    const CovarianceHyper hyper =
        OpeModel::fit_hyper(space, design, codec.grid(), y, prior, cfg.emulator_jitter);
    return OpeModel::train(space, design, codec.grid(), y, hyper, prior);
}

double envelope_containment(const Eigen::MatrixXd& curves, const Eigen::VectorXd& truth) {
    const Eigen::VectorXd lo = curves.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = curves.colwise().maxCoeff().transpose();
    int inside = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (truth[i] >= lo[i] - 1e-12 && truth[i] <= hi[i] + 1e-12) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(truth.size());
}

} // namespace

void Pipeline::simulate(int wave_index) {
    const ParameterSpace space = wave_space(wave_index);
    const WaveConfig wc = cfg_.wave_config(wave_index);
    const std::string dir = wave_dir(wave_index);
    fs::create_directories(dir);

    WaveResult partial;
    partial.config = wc;
    partial.space = space;
    partial.design = latin_hypercube(space, wc.design_size, wc.design_seed());
    for (const auto& g : cfg_.scenario.gauges) partial.ensemble_gauges.push_back(g.name);
    partial.ensemble = run_ensemble(partial.design, cfg_.scenario.gauges, codec_,
                                    cfg_.scenario.wave_speed, wc.workers);
    write_design_artifacts(dir, cfg_, partial, codec_, cfg_.scenario);

    if (cfg_.truth.has_value() && wave_index == 1) {
        const std::string obs_dir = (fs::path(cfg_.out_dir) / "observations").string();
        fs::create_directories(obs_dir);
        const auto obs = observations();
        std::vector<double> times(static_cast<std::size_t>(codec_.grid().count()));
        for (const auto& [name, curve] : obs) {
            const Gauge& gauge = cfg_.scenario.gauge(name);
            for (std::size_t i = 0; i < times.size(); ++i) {
                times[i] = gauge.t_start +
                           codec_.grid().point(static_cast<int>(i)) * (gauge.t_end - gauge.t_start);
            }
            write_gauge_csv((fs::path(obs_dir) / (name + ".csv")).string(), times,
                            curve.on_grid(codec_.grid()), cfg_.provenance() + " twin_observation");
        }
    }
}

void Pipeline::train(int wave_index) {
    const ParameterSpace space = wave_space(wave_index);
    const WaveConfig wc = cfg_.wave_config(wave_index);
    const std::string dir = wave_dir(wave_index);
    if (!fs::exists(fs::path(dir) / "design.csv") ||
        !fs::exists(fs::path(dir) / "ensemble" / "manifest.json")) {
        throw MissingDependency("train needs " + dir +
                                "/design.csv and ensemble/ (run the simulate stage first)");
    }
    fs::create_directories(fs::path(dir) / "models");
    for (const auto& gauge : wc.gauges) {
        const OpeModel model = train_gauge_from_disk(dir, cfg_, space, gauge, codec_);
        nlohmann::json j = model.to_json();
        j["provenance"] = cfg_.provenance();
        write_json_file((fs::path(dir) / "models" / ("model_" + gauge + ".json")).string(), j);
    }
}

void Pipeline::wave(int wave_index) {
    const ParameterSpace space = wave_space(wave_index);
    const WaveConfig wc = cfg_.wave_config(wave_index);
    const std::string dir = wave_dir(wave_index);

    std::vector<OpeModel> models;
    models.reserve(wc.gauges.size());
    for (const auto& gauge : wc.gauges) {
        const std::string path =
            (fs::path(dir) / "models" / ("model_" + gauge + ".json")).string();
        if (!fs::exists(path)) {
            throw MissingDependency("wave needs the trained model " + path +
                                    " (run the train stage first)");
        }
        models.push_back(OpeModel::from_json(read_json_file(path)));
    }

    const auto obs_curves = observations();
    WaveResult result;
    result.config = wc;
    result.space = space;
    result.next_box = space;
    result.design.space = space;
    result.design.points = read_points_csv((fs::path(dir) / "design.csv").string(), space.size(),
                                           false);
    for (const auto& g : cfg_.scenario.gauges) result.ensemble_gauges.push_back(g.name);

    result.candidates = latin_hypercube(space, wc.candidate_count, wc.candidate_seed()).points;
    result.projection = ProjectionEnsemble::generate(codec_.grid(), wc.projection_count,
                                                     wc.projection_seed());
    std::vector<const OpeModel*> model_ptrs;
    for (std::size_t g = 0; g < wc.gauges.size(); ++g) {
        const auto it = obs_curves.find(wc.gauges[g]);
        if (it == obs_curves.end()) {
            throw MissingDependency("missing observation for gauge '" + wc.gauges[g] + "'");
        }
        model_ptrs.push_back(&models[g]);
        result.screening_obs.push_back(make_observed(wc.gauges[g], it->second, codec_));
    }

    ClassifyConfig ccfg;
    ccfg.posterior_samples = wc.posterior_samples;
    ccfg.folds = wc.folds;
    ccfg.target_frac = wc.target_frac;
    ccfg.delta_scale = wc.delta_scale;
    ccfg.mode = wc.mode;
    ccfg.threshold_override = wc.threshold_override;
    ccfg.use_derivative = wc.use_derivative;
    ccfg.workers = wc.workers;
    ccfg.seed = wc.classify_seed();
    result.classification = classify(result.candidates, model_ptrs, result.screening_obs,
                                     *result.projection, codec_, ccfg);

    const int n_nroy = static_cast<int>(
        std::count(result.classification.nroy.begin(), result.classification.nroy.end(), char(1)));
    result.nroy_points.resize(n_nroy, space.size());
    int r = 0;
    for (int i = 0; i < static_cast<int>(result.classification.nroy.size()); ++i) {
        if (result.classification.nroy[static_cast<std::size_t>(i)]) {
            result.nroy_points.row(r++) = result.candidates.row(i);
        }
    }
    result.all_ruled_out = n_nroy == 0;
    if (!result.all_ruled_out) {
        result.next_box = intersect(bounding_box(space, result.nroy_points), space);
    }

    if (cfg_.truth.has_value()) {
        const ImplausibilityRecord truth_score = score_point(
            *cfg_.truth, model_ptrs, result.screening_obs, *result.projection, codec_,
            result.classification, ccfg);
        write_screening_artifacts(dir, cfg_, result, &truth_score);
    } else {
        write_screening_artifacts(dir, cfg_, result, nullptr);
    }
}

void Pipeline::forecast(const std::string& gauge) {
    require(cfg_.scenario.has_gauge(gauge), "forecast: unknown gauge '" + gauge + "'");
    const int w = last_completed_wave();
    const std::string dir = wave_dir(w);
    const ParameterSpace space = wave_space(w);

    const Eigen::MatrixXd nroy =
        read_points_csv((fs::path(dir) / "nroy.csv").string(), space.size(), true);

    const std::string model_path =
        (fs::path(dir) / "models" / ("model_" + gauge + ".json")).string();
    OpeModel model = fs::exists(model_path)
                         ? OpeModel::from_json(read_json_file(model_path))
                         : train_gauge_from_disk(dir, cfg_, space, gauge, codec_);
    if (!fs::exists(model_path)) {
        nlohmann::json j = model.to_json();
        j["provenance"] = cfg_.provenance();
        write_json_file(model_path, j);
    }

    if (nroy.rows() == 0) {
        std::ofstream out(fs::path(dir) / "forecast_bands.csv");
        out << "# " << cfg_.provenance() << "\n";
        out << "# warning: empty NROY set, no forecast curves\n";
        out << "time,median,central_lo,central_hi,envelope_lo,envelope_hi\n";
        return;
    }

    Eigen::MatrixXd curves(nroy.rows(), codec_.grid().count());
    parallel_for(static_cast<std::size_t>(nroy.rows()), cfg_.workers, [&](std::size_t i) {
        curves.row(static_cast<Eigen::Index>(i)) =
            model.predictive(nroy.row(static_cast<Eigen::Index>(i)).transpose()).mean.transpose();
    });

    const FunctionalBoxplot box = functional_boxplot(curves);
    write_forecast_bands_csv((fs::path(dir) / "forecast_bands.csv").string(), codec_.grid(), box,
                             cfg_.provenance() + " gauge=" + gauge);
    std::optional<Eigen::VectorXd> truth_values;
    if (cfg_.truth.has_value()) {
        truth_values = simulate_values(SourceParams::from_vector(*cfg_.truth),
                                       cfg_.scenario.gauge(gauge), codec_.grid(),
                                       cfg_.scenario.wave_speed);
    }
    write_forecast_boxplot_svg((fs::path(dir) / "forecast_boxplot.svg").string(), codec_.grid(),
                               box, truth_values ? &*truth_values : nullptr,
                               cfg_.provenance() + " gauge=" + gauge);
    const auto summaries = parameter_summary(nroy, space);
    for (const auto& s : summaries) {
        write_violin_csv((fs::path(dir) / ("violin_" + s.name + ".csv")).string(), s,
                         cfg_.provenance());
    }
}

void Pipeline::compare() {
    require(!cfg_.forecast_gauge.empty(), "compare: config has no forecast_gauge");
    const int w = last_completed_wave();
    const std::string dir = wave_dir(w);
    const ParameterSpace space = wave_space(w);
    const WaveConfig wc = cfg_.wave_config(w);

    std::vector<OpeModel> models;
    std::vector<const OpeModel*> model_ptrs;
    std::vector<FunctionalCurve> obs_curves;
    const auto obs = observations();
    for (const auto& gauge : wc.gauges) {
        const std::string path =
            (fs::path(dir) / "models" / ("model_" + gauge + ".json")).string();
        if (!fs::exists(path)) {
            throw MissingDependency("compare needs the trained model " + path);
        }
        models.push_back(OpeModel::from_json(read_json_file(path)));
        obs_curves.push_back(obs.at(gauge));
    }
    for (const auto& m : models) model_ptrs.push_back(&m);

    const Eigen::MatrixXd candidates =
        latin_hypercube(space, wc.candidate_count, wc.candidate_seed()).points;
    LandmarkClassifyConfig lcfg;
    lcfg.posterior_samples = wc.posterior_samples;
    lcfg.folds = wc.folds;
    lcfg.target_frac = wc.target_frac;
    lcfg.delta_scale = wc.delta_scale;
    lcfg.workers = wc.workers;
    lcfg.seed = derive_seed(cfg_.seed, {0x1A2Du, static_cast<std::uint64_t>(w)});
    const LandmarkClassifyResult lres =
        landmark_classify(candidates, model_ptrs, obs_curves, codec_, lcfg);

    Eigen::MatrixXd landmark_nroy(
        std::count(lres.nroy.begin(), lres.nroy.end(), char(1)), space.size());
    int r = 0;
    for (int i = 0; i < static_cast<int>(lres.nroy.size()); ++i) {
        if (lres.nroy[static_cast<std::size_t>(i)]) landmark_nroy.row(r++) = candidates.row(i);
    }
    const Eigen::MatrixXd fhm_nroy =
        read_points_csv((fs::path(dir) / "nroy.csv").string(), space.size(), true);

    const std::string model_path =
        (fs::path(dir) / "models" / ("model_" + cfg_.forecast_gauge + ".json")).string();
    OpeModel target = fs::exists(model_path)
                          ? OpeModel::from_json(read_json_file(model_path))
                          : train_gauge_from_disk(dir, cfg_, space, cfg_.forecast_gauge, codec_);

    const auto forecast_matrix = [&](const Eigen::MatrixXd& pts) {
        Eigen::MatrixXd curves(pts.rows(), codec_.grid().count());
        parallel_for(static_cast<std::size_t>(pts.rows()), cfg_.workers, [&](std::size_t i) {
            curves.row(static_cast<Eigen::Index>(i)) =
                target.predictive(pts.row(static_cast<Eigen::Index>(i)).transpose())
                    .mean.transpose();
        });
        return curves;
    };

    std::ofstream out(fs::path(dir) / "comparison.csv");
    if (!out) throw IoError("cannot write comparison.csv");
    out.precision(10);
    out << "# " << cfg_.provenance() << "\n";
    out << "method,nroy_count,envelope_area,truth_containment\n";
    const auto emit = [&](const std::string& method, const Eigen::MatrixXd& pts) {
        double area = 0.0;
        double containment = std::nan("");
        if (pts.rows() > 0) {
            const Eigen::MatrixXd curves = forecast_matrix(pts);
            area = envelope_area(curves, codec_.grid());
            if (cfg_.truth.has_value()) {
                const Eigen::VectorXd truth_curve = simulate_values(
                    SourceParams::from_vector(*cfg_.truth), cfg_.scenario.gauge(cfg_.forecast_gauge),
                    codec_.grid(), cfg_.scenario.wave_speed);
                containment = envelope_containment(curves, truth_curve);
            }
        }
        out << method << "," << pts.rows() << "," << area << "," << containment << "\n";
    };
    emit("functional", fhm_nroy);
    emit("landmark", landmark_nroy);
}

TwinReport Pipeline::twin() {
    require(cfg_.truth.has_value(), "twin: config must provide the truth input");
    fs::create_directories(cfg_.out_dir);

    const auto obs = observations();
    {
        // Persist the synthetic observations for inspection/reuse.
        const std::string obs_dir = (fs::path(cfg_.out_dir) / "observations").string();
        fs::create_directories(obs_dir);
        std::vector<double> times(static_cast<std::size_t>(codec_.grid().count()));
        for (const auto& [name, curve] : obs) {
            const Gauge& gauge = cfg_.scenario.gauge(name);
            for (std::size_t i = 0; i < times.size(); ++i) {
                times[i] = gauge.t_start +
                           codec_.grid().point(static_cast<int>(i)) * (gauge.t_end - gauge.t_start);
            }
            write_gauge_csv((fs::path(obs_dir) / (name + ".csv")).string(), times,
                            curve.on_grid(codec_.grid()), cfg_.provenance() + " twin_observation");
        }
    }

    TwinReport report;
    report.waves = cfg_.wave_count();
    std::vector<WaveResult> results;
    ParameterSpace box = *cfg_.space;

    for (int w = 1; w <= cfg_.wave_count(); ++w) {
        const WaveConfig wc = cfg_.wave_config(w);
        WaveResult res = run_wave(box, cfg_.scenario, wc, obs, codec_);

        std::vector<const OpeModel*> model_ptrs;
        for (const auto& gauge : wc.gauges) model_ptrs.push_back(&res.models.at(gauge));
        ClassifyConfig ccfg;
        ccfg.posterior_samples = wc.posterior_samples;
        ccfg.folds = wc.folds;
        ccfg.target_frac = wc.target_frac;
        ccfg.delta_scale = wc.delta_scale;
        ccfg.mode = wc.mode;
        ccfg.threshold_override = wc.threshold_override;
    ccfg.threshold_override = wc.threshold_override;
        ccfg.use_derivative = wc.use_derivative;
        ccfg.workers = wc.workers;
        ccfg.seed = wc.classify_seed();
        const ImplausibilityRecord truth_score =
            score_point(*cfg_.truth, model_ptrs, res.screening_obs, *res.projection, codec_,
                        res.classification, ccfg);

        const std::string dir = wave_dir(w);
        fs::create_directories(dir);
        write_design_artifacts(dir, cfg_, res, codec_, cfg_.scenario);
        write_model_artifacts(dir, cfg_, res);
        write_screening_artifacts(dir, cfg_, res, &truth_score);

        const int nroy_count = static_cast<int>(res.nroy_points.rows());
        report.nroy_counts.push_back(nroy_count);
        report.nroy_fractions.push_back(static_cast<double>(nroy_count) /
                                        static_cast<double>(res.candidates.rows()));
        std::vector<int> curve_cols;
        const int per_gauge = wc.use_derivative ? 2 : 1;
        for (int g = 0; g < static_cast<int>(wc.gauges.size()); ++g) {
            curve_cols.push_back(g * per_gauge);
        }
        const Combination curve_only = combine_components(res.classification, curve_cols);
        report.curve_only_counts.push_back(
            static_cast<int>(std::count(curve_only.nroy.begin(), curve_only.nroy.end(), char(1))));
        report.truth_nroy.push_back(truth_score.nroy);

        if (res.all_ruled_out) {
            report.truth_in_box.push_back(false);
            results.push_back(std::move(res));
            break;
        }
        report.truth_in_box.push_back(res.next_box.contains(*cfg_.truth));
        box = next_space(res);
        results.push_back(std::move(res));
    }

    // Box nesting and volume monotonicity across waves.
    report.nesting_ok = true;
    report.volume_monotone_ok = true;
    double prev_volume_fraction = 1.0;
    const double total_volume = cfg_.space->volume();
    for (const auto& res : results) {
        if (res.all_ruled_out) {
            report.nesting_ok = false;
            break;
        }
        for (int j = 0; j < cfg_.space->size(); ++j) {
            if (res.next_box.dim(j).lo < res.space.dim(j).lo - 1e-12 ||
                res.next_box.dim(j).hi > res.space.dim(j).hi + 1e-12) {
                report.nesting_ok = false;
            }
        }
        const double vf = res.next_box.volume() / total_volume;
        if (vf > prev_volume_fraction + 1e-12) report.volume_monotone_ok = false;
        prev_volume_fraction = vf;
    }

    report.fraction_ok = !report.nroy_fractions.empty();
    for (double f : report.nroy_fractions) {
        report.fraction_ok = report.fraction_ok && f >= kFractionLo && f <= kFractionHi;
    }
    report.derivative_filter_ok = true;
    for (std::size_t i = 0; i < report.nroy_counts.size(); ++i) {
        if (report.nroy_counts[i] > report.curve_only_counts[i]) {
            report.derivative_filter_ok = false;
        }
    }
    report.truth_ok = !report.truth_nroy.empty();
    for (std::size_t i = 0; i < report.truth_nroy.size(); ++i) {
        report.truth_ok = report.truth_ok && report.truth_nroy[i] && report.truth_in_box[i];
    }

    // Virtual-gauge study on wave 1: recombine the stored component scores
    // with and without the far-side gauge.
    if (!results.empty() && !cfg_.virtual_gauge.empty()) {
        const WaveResult& w1 = results.front();
        const auto& gauges = w1.config.gauges;
        const auto it = std::find(gauges.begin(), gauges.end(), cfg_.virtual_gauge);
        if (it != gauges.end()) {
            report.virtual_present = true;
            const int virtual_idx = static_cast<int>(it - gauges.begin());
            const int per_gauge = w1.config.use_derivative ? 2 : 1;
            std::vector<int> with_cols, without_cols;
            for (int g = 0; g < static_cast<int>(gauges.size()); ++g) {
                for (int d = 0; d < per_gauge; ++d) {
                    with_cols.push_back(g * per_gauge + d);
                    if (g != virtual_idx) without_cols.push_back(g * per_gauge + d);
                }
            }
            const Combination with_v = combine_components(w1.classification, with_cols);
            const Combination without_v = combine_components(w1.classification, without_cols);
            report.nroy_with_virtual =
                static_cast<int>(std::count(with_v.nroy.begin(), with_v.nroy.end(), char(1)));
            report.nroy_without_virtual = static_cast<int>(
                std::count(without_v.nroy.begin(), without_v.nroy.end(), char(1)));
            report.virtual_ok = report.nroy_with_virtual <= report.nroy_without_virtual;
        }
    }

    // Forecast comparison at the target gauge on the final wave.
    if (!results.empty() && !results.back().all_ruled_out && !cfg_.forecast_gauge.empty()) {
        WaveResult& final_wave = results.back();
        const OpeModel& target = ensure_gauge_model(final_wave, cfg_.forecast_gauge, codec_);
        write_model_artifacts(wave_dir(final_wave.config.index), cfg_, final_wave);

        const std::vector<FunctionalCurve> fhm_curves = fhm::forecast(final_wave, target, codec_);
        report.fhm_forecast_count = static_cast<int>(fhm_curves.size());
        const Eigen::VectorXd truth_curve = simulate_values(
            SourceParams::from_vector(*cfg_.truth), cfg_.scenario.gauge(cfg_.forecast_gauge),
            codec_.grid(), cfg_.scenario.wave_speed);

        if (!fhm_curves.empty()) {
            const Eigen::MatrixXd fhm_matrix = curves_to_matrix(fhm_curves, codec_.grid());
            report.fhm_area = envelope_area(fhm_matrix, codec_.grid());
            report.fhm_containment = envelope_containment(fhm_matrix, truth_curve);
            report.containment_ok = report.fhm_containment >= kContainmentTarget;

            if (fhm_matrix.rows() >= 4) {
                const FunctionalBoxplot fbox = functional_boxplot(fhm_matrix);
                const std::string dir = wave_dir(final_wave.config.index);
                write_forecast_bands_csv((fs::path(dir) / "forecast_bands.csv").string(),
                                         codec_.grid(), fbox,
                                         cfg_.provenance() + " gauge=" + cfg_.forecast_gauge);
                write_forecast_boxplot_svg((fs::path(dir) / "forecast_boxplot.svg").string(),
                                           codec_.grid(), fbox, &truth_curve,
                                           cfg_.provenance() + " gauge=" + cfg_.forecast_gauge);
                for (const auto& s : parameter_summary(final_wave.nroy_points, final_wave.space)) {
                    write_violin_csv((fs::path(dir) / ("violin_" + s.name + ".csv")).string(), s,
                                     cfg_.provenance());
                }
            }
        }

        // Landmark baseline on the same candidates.
        std::vector<const OpeModel*> model_ptrs;
        std::vector<FunctionalCurve> obs_curves;
        for (const auto& gauge : final_wave.config.gauges) {
            model_ptrs.push_back(&final_wave.models.at(gauge));
            obs_curves.push_back(obs.at(gauge));
        }
        LandmarkClassifyConfig lcfg;
        lcfg.posterior_samples = cfg_.posterior_samples;
        lcfg.folds = cfg_.folds;
        lcfg.target_frac = cfg_.target_frac;
        lcfg.delta_scale = cfg_.delta_scale;
        lcfg.workers = cfg_.workers;
        lcfg.seed = derive_seed(cfg_.seed, {0x1A2Du,
                                            static_cast<std::uint64_t>(final_wave.config.index)});
        const LandmarkClassifyResult lres =
            landmark_classify(final_wave.candidates, model_ptrs, obs_curves, codec_, lcfg);
        report.landmark_truth_nroy =
            landmark_score_point(*cfg_.truth, model_ptrs, obs_curves, codec_, lres, lcfg);
        Eigen::MatrixXd landmark_nroy(
            std::count(lres.nroy.begin(), lres.nroy.end(), char(1)), cfg_.space->size());
        int r = 0;
        for (int i = 0; i < static_cast<int>(lres.nroy.size()); ++i) {
            if (lres.nroy[static_cast<std::size_t>(i)]) {
                landmark_nroy.row(r++) = final_wave.candidates.row(i);
            }
        }
        report.landmark_forecast_count = static_cast<int>(landmark_nroy.rows());
        if (landmark_nroy.rows() > 0) {
            Eigen::MatrixXd lm_matrix(landmark_nroy.rows(), codec_.grid().count());
            parallel_for(static_cast<std::size_t>(landmark_nroy.rows()), cfg_.workers,
                         [&](std::size_t i) {
                             lm_matrix.row(static_cast<Eigen::Index>(i)) =
                                 target
                                     .predictive(
                                         landmark_nroy.row(static_cast<Eigen::Index>(i)).transpose())
                                     .mean.transpose();
                         });
            report.landmark_area = envelope_area(lm_matrix, codec_.grid());
        }
        report.area_ok = report.fhm_forecast_count > 0 && report.landmark_forecast_count > 0 &&
                         report.fhm_area < report.landmark_area;

        {
            const std::string dir = wave_dir(final_wave.config.index);
            std::ofstream cmp(fs::path(dir) / "comparison.csv");
            cmp.precision(10);
            cmp << "# " << cfg_.provenance() << "\n";
            cmp << "method,nroy_count,envelope_area,truth_containment\n";
            cmp << "functional," << report.fhm_forecast_count << "," << report.fhm_area << ","
                << report.fhm_containment << "\n";
            double lm_containment = std::nan("");
            if (landmark_nroy.rows() > 0) {
                Eigen::MatrixXd lm_matrix(landmark_nroy.rows(), codec_.grid().count());
                for (Eigen::Index i = 0; i < landmark_nroy.rows(); ++i) {
                    lm_matrix.row(i) = target.predictive(landmark_nroy.row(i).transpose())
                                           .mean.transpose();
                }
                lm_containment = envelope_containment(lm_matrix, truth_curve);
            }
            cmp << "landmark," << report.landmark_forecast_count << "," << report.landmark_area
                << "," << lm_containment << "\n";
        }
    }

    // Table-1-style per-operation timings at desk scale.
    if (!results.empty()) {
        const WaveResult& w1 = results.front();
        std::vector<TimingRow> rows;
        const SourceParams probe = SourceParams::from_vector(*cfg_.truth);
        rows.push_back(time_repeat("simulation", 20, [&] {
            for (const auto& g : cfg_.scenario.gauges) {
                simulate_values(probe, g, codec_.grid(), cfg_.scenario.wave_speed);
            }
        }));
        const std::string first_gauge = w1.config.gauges.front();
        const OpeModel& m = w1.models.at(first_gauge);
        rows.push_back(time_repeat("training", 3, [&] {
            OpeModel::train(w1.space, w1.design.points, codec_.grid(), m.outputs(), m.hyper(),
                            m.prior());
        }));
        const Eigen::VectorXd probe_theta = *cfg_.truth;
        rows.push_back(time_repeat("emulation_per_candidate", 20, [&] {
            const auto pred = m.predictive(probe_theta);
            Rng rng(7);
            const Eigen::MatrixXd f = m.sample_fluctuations(pred, 1, rng);
            const FunctionalCurve c = codec_.fit(pred.mean + f.col(0));
            c.derivative();
        }));
        const Eigen::VectorXd obs_values = obs.at(first_gauge).on_grid(codec_.grid());
        const Eigen::VectorXd mean_values = m.predictive(probe_theta).mean;
        const auto& proj = *w1.projection;
        rows.push_back(time_repeat("projection_per_distance", 20, [&] {
            proj.distance_values(mean_values, obs_values);
        }));
        write_timings_csv((fs::path(cfg_.out_dir) / "timings.csv").string(), rows,
                          cfg_.provenance());
    }

    report.pass = report.truth_ok && report.nesting_ok && report.volume_monotone_ok &&
                  report.fraction_ok && report.derivative_filter_ok && report.virtual_ok &&
                  report.area_ok && report.containment_ok;
    write_json_file((fs::path(cfg_.out_dir) / "twin_summary.json").string(), report.to_json());
    return report;
}

} // namespace fhm
