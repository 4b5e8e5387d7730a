// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if a gating
// criterion fails. The twin experiment (criteria 7 and 8) runs the bundled
// desk-scale configuration end to end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "curve.hpp"
#include "implausibility.hpp"
#include "ope.hpp"
#include "pipeline.hpp"
#include "projection.hpp"
#include "reporting.hpp"
#include "rng.hpp"
#include "run_config.hpp"
#include "oracles/dense_nig.hpp"

using namespace fhm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    bool gating = true;
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = out.pass ? "[PASS]" : (out.gating ? "[FAIL]" : "[WARN]");
    std::printf("%s criterion %2d: %-38s %7.2fs  %s\n", tag, id, name.c_str(), secs,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass && out.gating) ++g_failures;
}

// ---------------------------------------------------------------- criterion 1

Outcome kernel_correctness() {
    Rng rng(101);
    double max_err = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 1 + static_cast<int>(rng.index(5));
        Eigen::VectorXd a(p), b(p), len(p);
        for (int j = 0; j < p; ++j) {
            a[j] = 4.0 * rng.uniform() - 2.0;
            b[j] = 4.0 * rng.uniform() - 2.0;
            len[j] = 0.05 + 3.0 * rng.uniform();
        }
        double expect = 1.0;
        for (int j = 0; j < p; ++j) {
            expect *= std::exp(-std::pow(std::abs(a[j] - b[j]) / len[j], 1.5));
        }
        max_err = std::max(max_err, std::abs(kernel_theta(a, b, len) - expect));
        const double t1 = rng.uniform(), t2 = rng.uniform(), lt = 0.05 + rng.uniform();
        const double et = std::exp(-std::pow(std::abs(t1 - t2) / lt, 1.5));
        max_err = std::max(max_err, std::abs(kernel_t(t1, t2, lt) - et));
        if (kernel_theta(a, a, len) != 1.0 || kernel_t(t1, t1, lt) != 1.0) {
            return {false, "kappa(x,x) != 1 exactly", true};
        }
    }
    Outcome out;
    out.pass = max_err < 1e-12;
    out.detail = "max abs err " + std::to_string(max_err);
    return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome ope_oracle_equivalence() {
    Rng rng(202);
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const int p = 1 + static_cast<int>(rng.index(3));
        const int n = 2 + static_cast<int>(rng.index(5));
        const int q = 4 + static_cast<int>(rng.index(5));

        std::vector<Dimension> dims;
        for (int j = 0; j < p; ++j) dims.push_back({"u" + std::to_string(j), -1.0, 1.0, ""});
        const ParameterSpace space{dims};
        Eigen::MatrixXd design(n, p), outputs(n, q);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) design(i, j) = 2.0 * rng.uniform() - 1.0;
            for (int j = 0; j < q; ++j) outputs(i, j) = rng.normal();
        }
        const TimeGrid grid = TimeGrid::uniform(q);
        CovarianceHyper hyper;
        hyper.input_lengths = Eigen::VectorXd(p);
        for (int j = 0; j < p; ++j) hyper.input_lengths[j] = 0.3 + 2.0 * rng.uniform();
        hyper.output_length = 0.1 + rng.uniform();
        hyper.jitter = 1e-8;
        const RegressorSet reg(p);
        NigPrior prior = NigPrior::weakly_informative(reg.count());
        prior.shape = 1.5 + 2.0 * rng.uniform();
        prior.scale = 0.5 + rng.uniform();
        Eigen::MatrixXd m(reg.count(), reg.count());
        for (int a = 0; a < reg.count(); ++a) {
            for (int b = 0; b < reg.count(); ++b) m(a, b) = rng.normal();
        }
        prior.cov = m * m.transpose() + 10.0 * Eigen::MatrixXd::Identity(reg.count(), reg.count());
        for (int a = 0; a < reg.count(); ++a) prior.mean[a] = 0.3 * rng.normal();

        const OpeModel model = OpeModel::train(space, design, grid, outputs, hyper, prior);
        oracle::DenseNig dense;
        dense.unit_design = design;
        dense.grid = grid.points();
        dense.input_lengths = hyper.input_lengths;
        dense.output_length = hyper.output_length;
        dense.jitter = hyper.jitter;
        dense.prior_mean = prior.mean;
        dense.prior_cov = prior.cov;
        dense.prior_shape = prior.shape;
        dense.prior_scale = prior.scale;
        dense.outputs = outputs;
        dense.fit();

        const double mscale = std::max(1.0, dense.post_mean.cwiseAbs().maxCoeff());
        worst = std::max(worst,
                         (model.posterior().mean - dense.post_mean).cwiseAbs().maxCoeff() / mscale);
        const double cscale = std::max(1.0, dense.post_cov.cwiseAbs().maxCoeff());
        worst = std::max(worst,
                         (model.posterior().cov - dense.post_cov).cwiseAbs().maxCoeff() / cscale);
        worst = std::max(worst, std::abs(model.posterior().shape - dense.post_shape) /
                                    dense.post_shape);
        worst = std::max(worst, std::abs(model.posterior().scale - dense.post_scale) /
                                    dense.post_scale);
        for (int t = 0; t < 2; ++t) {
            Eigen::VectorXd theta(p);
            for (int j = 0; j < p; ++j) theta[j] = 2.0 * rng.uniform() - 1.0;
            const auto pred = model.predict(theta);
            Eigen::VectorXd omean, ovar;
            dense.predict(theta, omean, ovar);
            const double ms = std::max(1.0, omean.cwiseAbs().maxCoeff());
            worst = std::max(worst, (pred.mean - omean).cwiseAbs().maxCoeff() / ms);
            const double vs = std::max(1e-12, ovar.maxCoeff());
            worst = std::max(worst, (pred.variance - ovar).cwiseAbs().maxCoeff() / vs);
        }
    }
    Outcome out;
    out.pass = worst < 1e-8;
    out.detail = "worst rel err " + std::to_string(worst);
    return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome interpolation_at_training_inputs() {
    const int p = 2, n = 10, q = 31;
    std::vector<Dimension> dims = {{"a", -1.0, 1.0, ""}, {"b", -1.0, 1.0, ""}};
    const ParameterSpace space{dims};
    Rng rng(303);
    Eigen::MatrixXd design(n, p);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = -0.9 + 1.8 * i / (n - 1.0);
        design(i, 1) = std::sin(2.1 * i);
    }
    const TimeGrid grid = TimeGrid::uniform(q);
    Eigen::MatrixXd outputs(n, q);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) {
            outputs(i, j) = std::sin(2.0 * M_PI * grid.point(j) + design(i, 0)) +
                            0.4 * design(i, 1) * grid.point(j);
        }
    }
    CovarianceHyper hyper;
    hyper.input_lengths = Eigen::VectorXd::Constant(p, 0.5);
    hyper.output_length = 0.3;
    hyper.jitter = 1e-8;
    const NigPrior prior = NigPrior::weakly_informative(RegressorSet(p).count());
    const OpeModel model = OpeModel::train(space, design, grid, outputs, hyper, prior);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto pred = model.predict(design.row(i).transpose());
        worst = std::max(worst,
                         (pred.mean - outputs.row(i).transpose()).cwiseAbs().maxCoeff());
    }
    Outcome out;
    out.pass = worst < 1e-6;
    out.detail = "sup-norm " + std::to_string(worst);
    return out;
}

// ---------------------------------------------------------------- criterion 4

Outcome projection_convergence() {
    const TimeGrid grid = TimeGrid::uniform(101);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    Eigen::VectorXd fv(grid.count()), gv(grid.count());
    for (int i = 0; i < grid.count(); ++i) {
        const double t = grid.point(i);
        fv[i] = std::sin(2.0 * M_PI * t);
        gv[i] = 0.8 * std::sin(2.0 * M_PI * t + 0.4);
    }
    const int replicates = 30;
    std::vector<double> log_m, log_sd;
    std::uint64_t seed = 40004;
    for (int m : {10, 100, 1000}) {
        std::vector<double> dists;
        for (int r = 0; r < replicates; ++r) {
            dists.push_back(
                ProjectionEnsemble::generate(grid, m, seed++).distance_values(fv, gv));
        }
        const double mean = std::accumulate(dists.begin(), dists.end(), 0.0) / replicates;
        double var = 0.0;
        for (double d : dists) var += (d - mean) * (d - mean);
        var /= (replicates - 1);
        log_m.push_back(std::log10(static_cast<double>(m)));
        log_sd.push_back(0.5 * std::log10(var));
    }
    const double xbar = std::accumulate(log_m.begin(), log_m.end(), 0.0) / 3.0;
    const double ybar = std::accumulate(log_sd.begin(), log_sd.end(), 0.0) / 3.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
        num += (log_m[static_cast<std::size_t>(i)] - xbar) *
               (log_sd[static_cast<std::size_t>(i)] - ybar);
        den += (log_m[static_cast<std::size_t>(i)] - xbar) *
               (log_m[static_cast<std::size_t>(i)] - xbar);
    }
    const double slope = num / den;
    Outcome out;
    out.pass = std::abs(slope + 0.5) <= 0.1;
    out.detail = "slope " + std::to_string(slope);
    return out;
}

// ---------------------------------------------------------------- criterion 5

Outcome chebyshev_threshold() {
    if (threshold(ThresholdMode::general) != 5.0 || threshold(ThresholdMode::unimodal) != 3.0) {
        return {false, "threshold values wrong", true};
    }
    Rng rng(505);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> draws(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const bool left = rng.uniform() < 0.5;
        const double d = (left ? -3.0 : 3.0) + 0.8 * rng.normal();
        draws[static_cast<std::size_t>(i)] = d;
        sum += d;
        sumsq += d * d;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sumsq / n - mean * mean);
    int beyond = 0;
    for (double d : draws) {
        if (std::abs(d - mean) >= 5.0 * sd) ++beyond;
    }
    const double frac = static_cast<double>(beyond) / n;
    Outcome out;
    out.pass = frac <= 0.04;
    out.detail = "tail mass " + std::to_string(frac) + " (bound 0.04)";
    return out;
}

// ---------------------------------------------------------------- criterion 6

Outcome algorithm1_oracle() {
    Rng rng(606);
    const int n = 500;
    Eigen::VectorXd dists(n), emu(n);
    for (int i = 0; i < n; ++i) {
        dists[i] = std::abs(rng.normal()) * (0.4 + rng.uniform());
        emu[i] = 0.005 * rng.uniform();
    }
    const double delta = 1e-3;
    const double thresh = 5.0;
    const std::uint64_t seed = 777;
    const double fast = estimate_shared_uncertainty(dists, emu, 5, 0.05, delta, thresh, seed);

    // brute-force scan oracle (literal loop)
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(seed);
    shuffle_rng.shuffle(order);
    const double b = 0.05 * n * 4.0 / 5.0;
    double total = 0.0;
    for (int j = 0; j < 5; ++j) {
        double a = 0.0;
        for (;;) {
            a += delta;
            int count = 0;
            for (int pos = 0; pos < n; ++pos) {
                if (pos % 5 == j) continue;
                const int idx = order[static_cast<std::size_t>(pos)];
                if (dists[idx] / std::sqrt(emu[idx] + a) < thresh) ++count;
            }
            if (static_cast<double>(count) >= b) break;
        }
        total += a;
    }
    const double slow = total / 5.0;

    // monotonicity: NROY count nondecreasing in a (exhaustive over the scan grid)
    bool monotone = true;
    int prev = -1;
    for (double a = delta; a <= 0.2; a += delta) {
        int count = 0;
        for (int i = 0; i < n; ++i) {
            if (dists[i] / std::sqrt(emu[i] + a) < thresh) ++count;
        }
        if (count < prev) monotone = false;
        prev = count;
    }
    Outcome out;
    out.pass = std::abs(fast - slow) <= delta + 1e-12 && monotone;
    out.detail = "fast " + std::to_string(fast) + " scan " + std::to_string(slow);
    return out;
}

// ----------------------------------------------------------- criteria 7 and 8

TwinReport g_twin_report;
bool g_twin_ran = false;
double g_twin_seconds = 0.0;

Outcome twin_experiment() {
    RunConfig cfg = RunConfig::bundled_twin();
    cfg.out_dir = "acceptance_twin_out";
    std::filesystem::remove_all(cfg.out_dir);
    Pipeline pipe(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    g_twin_report = pipe.twin();
    g_twin_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    g_twin_ran = true;

    const TwinReport& r = g_twin_report;
    std::string detail;
    bool pass = true;
    const auto check = [&](bool ok, const std::string& label) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + label;
        }
    };
    check(r.truth_ok, "truth not recovered");
    check(r.nesting_ok && r.volume_monotone_ok, "boxes not nested");
    check(r.fraction_ok, "NROY fraction outside [1%,15%]");
    check(r.derivative_filter_ok, "derivative filter enlarged NROY");
    check(r.virtual_present && r.virtual_ok, "virtual gauge check failed");

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const double budget = 600.0 * std::max(1.0, 8.0 / static_cast<double>(hw));
    check(g_twin_seconds < budget, "over time budget");

    std::string fr;
    for (double f : r.nroy_fractions) fr += std::to_string(100.0 * f).substr(0, 5) + "% ";
    Outcome out;
    out.pass = pass;
    out.detail = detail.empty()
                     ? "fractions " + fr + "wall " + std::to_string(g_twin_seconds).substr(0, 6) +
                           "s (budget " + std::to_string(budget).substr(0, 6) + "s on " +
                           std::to_string(hw) + " threads)"
                     : detail;
    return out;
}

Outcome baseline_comparison() {
    if (!g_twin_ran) return {false, "twin did not run", true};
    const TwinReport& r = g_twin_report;
    std::string detail = "area fhm " + std::to_string(r.fhm_area) + " vs landmark " +
                         std::to_string(r.landmark_area) + ", containment " +
                         std::to_string(100.0 * r.fhm_containment) + "%";
    Outcome out;
    out.pass = r.area_ok && r.containment_ok;
    out.detail = detail;
    return out;
}

// ---------------------------------------------------------------- criterion 9

Outcome functional_boxplot_checks() {
    Rng rng(909);
    Eigen::MatrixXd curves(20, 25);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 25; ++j) curves(i, j) = rng.normal();
    }
    const Eigen::VectorXd fast = band_depth(curves);
    // brute-force pairwise-envelope oracle
    Eigen::VectorXd slow = Eigen::VectorXd::Zero(20);
    int pairs = 0;
    for (int a = 0; a < 20; ++a) {
        for (int b = a + 1; b < 20; ++b) {
            ++pairs;
            for (int c = 0; c < 20; ++c) {
                int inside = 0;
                for (int j = 0; j < 25; ++j) {
                    const double lo = std::min(curves(a, j), curves(b, j));
                    const double hi = std::max(curves(a, j), curves(b, j));
                    if (curves(c, j) >= lo && curves(c, j) <= hi) ++inside;
                }
                slow[c] += static_cast<double>(inside) / 25.0;
            }
        }
    }
    slow /= pairs;
    const bool depth_exact = (fast - slow).cwiseAbs().maxCoeff() == 0.0;

    Eigen::MatrixXd family(16, 30);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 30; ++j) {
            family(i, j) = std::sin(5.0 * j / 29.0) + 0.04 * (i - 8);
        }
    }
    family.row(15).array() += 30.0; // planted outlier
    const FunctionalBoxplot box = functional_boxplot(family);
    const bool outlier_found = box.outliers.size() == 1 && box.outliers[0] == 15;
    const bool median_max = box.depths[box.median_index] == box.depths.maxCoeff();

    Outcome out;
    out.pass = depth_exact && outlier_found && median_max;
    out.detail = std::string(depth_exact ? "depth exact" : "depth mismatch") +
                 (outlier_found ? ", outlier found" : ", outlier missed") +
                 (median_max ? ", median deepest" : ", median not deepest");
    return out;
}

// --------------------------------------------------------------- criterion 10

Outcome timing_mirror() {
    if (!g_twin_ran) return {false, "twin did not run", false};
    // Direct desk-scale measurement, mirroring the per-operation table.
    const Scenario scenario = Scenario::bundled_default();
    const TimeGrid grid = scenario.make_grid();
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const ParameterSpace space = ParameterSpace::from_json(Scenario::bundled_space_json());
    const DesignMatrix design = latin_hypercube(space, 100, 1);
    const EnsembleTable table =
        run_ensemble(design, {scenario.gauge("dart_1")}, codec, scenario.wave_speed, 0);
    Eigen::MatrixXd y(design.points.rows(), grid.count());
    for (int i = 0; i < table.rows; ++i) y.row(i) = table.at(i, 0).on_grid(grid).transpose();
    CovarianceHyper hyper;
    hyper.input_lengths = Eigen::VectorXd::Constant(5, 2.0);
    hyper.output_length = 0.4;
    hyper.jitter = 1e-8;
    const NigPrior prior = NigPrior::weakly_informative(RegressorSet(5).count());
    const OpeModel model = OpeModel::train(space, design.points, grid, y, hyper, prior);
    const ProjectionEnsemble proj = ProjectionEnsemble::generate(grid, 1000, 2);
    Eigen::VectorXd theta(5);
    theta << 63.0, 24.6, 1.0, 0.15, 8.0;

    double emu_total = 0.0, proj_total = 0.0;
    const int reps = 20;
    Eigen::VectorXd mean;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto pred = model.predictive(theta);
        Rng rng(static_cast<std::uint64_t>(r));
        const Eigen::MatrixXd f = model.sample_fluctuations(pred, 1, rng);
        const FunctionalCurve c = codec.fit(pred.mean + f.col(0));
        c.derivative();
        emu_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        mean = pred.mean;
    }
    const Eigen::VectorXd obs = y.row(0).transpose();
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        proj.distance_values(mean, obs);
        proj_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const double emu = emu_total / reps;
    const double prj = proj_total / reps;
    Outcome out;
    out.gating = false; // informational
    out.pass = emu < 0.5 && prj < 0.05;
    out.detail = "emulation " + std::to_string(emu) + "s (<0.5), distance " + std::to_string(prj) +
                 "s (<0.05); timings.csv written by the twin";
    return out;
}

} // namespace

int main() {
    std::printf("functional history matching: acceptance suite\n");
    run_criterion(1, "kernel closed form", kernel_correctness);
    run_criterion(2, "OPE dense-oracle equivalence", ope_oracle_equivalence);
    run_criterion(3, "interpolation at training inputs", interpolation_at_training_inputs);
    run_criterion(4, "projection distance convergence", projection_convergence);
    run_criterion(5, "Chebyshev 5-sigma bound", chebyshev_threshold);
    run_criterion(6, "shared-uncertainty calibration", algorithm1_oracle);
    run_criterion(7, "twin experiment (flagship)", twin_experiment);
    run_criterion(8, "landmark baseline comparison", baseline_comparison);
    run_criterion(9, "functional boxplot", functional_boxplot_checks);
    run_criterion(10, "per-operation timings (informational)", timing_mirror);
    if (g_failures > 0) {
        std::printf("%d gating criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all gating criteria passed\n");
    return 0;
}
