#include <doctest.h>

#include <cmath>
#include <numbers>

#include "curve.hpp"
#include "errors.hpp"
#include "projection.hpp"
#include "rng.hpp"

using namespace fhm;

namespace {

FunctionalCurve fit_fn(const CurveCodec& codec, const std::function<double(double)>& f) {
    Eigen::VectorXd values(codec.grid().count());
    for (int i = 0; i < codec.grid().count(); ++i) values[i] = f(codec.grid().point(i));
    return codec.fit(values);
}

} // namespace

TEST_CASE("wiener paths start at zero and have unit terminal variance") {
    const TimeGrid grid = TimeGrid::uniform(41);
    const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, 100000, 5);
    CHECK((ens.paths().col(0).array() == 0.0).all());
    const Eigen::VectorXd terminal = ens.paths().col(grid.count() - 1);
    const double mean = terminal.mean();
    const double var = (terminal.array() - mean).square().sum() / (terminal.size() - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("generation is deterministic per seed") {
    const TimeGrid grid = TimeGrid::uniform(21);
    const ProjectionEnsemble a = ProjectionEnsemble::generate(grid, 50, 77);
    const ProjectionEnsemble b = ProjectionEnsemble::generate(grid, 50, 77);
    const ProjectionEnsemble c = ProjectionEnsemble::generate(grid, 50, 78);
    CHECK(a.paths() == b.paths());
    CHECK(a.paths() != c.paths());
    CHECK_THROWS_AS(ProjectionEnsemble::generate(grid, 0, 1), InvalidArgument);
}

TEST_CASE("projection of the zero curve vanishes and is bilinear") {
    const TimeGrid grid = TimeGrid::uniform(61);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, 20, 3);

    const FunctionalCurve zero(codec.basis(), Eigen::VectorXd::Zero(codec.basis()->size()));
    for (int m = 0; m < ens.count(); ++m) CHECK(ens.project(zero, m) == 0.0);

    const FunctionalCurve f = fit_fn(codec, [](double t) { return std::sin(3.0 * t); });
    const FunctionalCurve g = fit_fn(codec, [](double t) { return t * t - 0.3; });
    const double alpha = 1.3, beta = -0.7;
    FunctionalCurve mix(codec.basis(), alpha * f.coefficients() + beta * g.coefficients());
    for (int m = 0; m < ens.count(); ++m) {
        const double lhs = ens.project(mix, m);
        const double rhs = alpha * ens.project(f, m) + beta * ens.project(g, m);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("projection of the unit curve matches a refined-quadrature oracle") {
    const TimeGrid grid = TimeGrid::uniform(81);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, 5, 11);
    const FunctionalCurve one = fit_fn(codec, [](double) { return 1.0; });
    for (int m = 0; m < ens.count(); ++m) {
        // trapezoid oracle at double resolution with linear path interpolation
        double oracle = 0.0;
        const int fine = 2 * (grid.count() - 1);
        for (int k = 0; k < fine; ++k) {
            const double t0 = static_cast<double>(k) / fine;
            const double t1 = static_cast<double>(k + 1) / fine;
            const auto path_at = [&](double t) {
                const double pos = t * (grid.count() - 1);
                const int j = std::min(grid.count() - 2, static_cast<int>(pos));
                const double frac = pos - j;
                return ens.paths()(m, j) * (1.0 - frac) + ens.paths()(m, j + 1) * frac;
            };
            oracle += 0.5 * (path_at(t0) + path_at(t1)) * (t1 - t0);
        }
        CHECK(ens.project(one, m) == doctest::Approx(oracle).epsilon(1e-3));
    }
}

TEST_CASE("distance: identity, symmetry, triangle inequality, scale covariance") {
    const TimeGrid grid = TimeGrid::uniform(61);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, 64, 9);

    const FunctionalCurve f = fit_fn(codec, [](double t) { return std::sin(6.0 * t); });
    const FunctionalCurve g = fit_fn(codec, [](double t) { return std::cos(2.0 * t); });
    const FunctionalCurve h = fit_fn(codec, [](double t) { return t; });

    CHECK(ens.distance(f, f) == 0.0);
    CHECK(ens.distance(f, g) == ens.distance(g, f));
    CHECK(ens.distance(f, h) <= ens.distance(f, g) + ens.distance(g, h) + 1e-12);

    const double alpha = -3.2;
    FunctionalCurve fa(codec.basis(), alpha * f.coefficients());
    FunctionalCurve ga(codec.basis(), alpha * g.coefficients());
    CHECK(ens.distance(fa, ga) ==
          doctest::Approx(std::abs(alpha) * ens.distance(f, g)).epsilon(1e-10));

    Rng rng(15);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd ca(codec.basis()->size()), cb(codec.basis()->size()), cc(codec.basis()->size());
        for (Eigen::Index i = 0; i < ca.size(); ++i) {
            ca[i] = rng.normal();
            cb[i] = rng.normal();
            cc[i] = rng.normal();
        }
        const FunctionalCurve a(codec.basis(), ca), b(codec.basis(), cb), c(codec.basis(), cc);
        CHECK(ens.distance(a, c) <= ens.distance(a, b) + ens.distance(b, c) + 1e-12);
    }
}

TEST_CASE("ensemble distance fluctuation decays like one over sqrt(M)") {
    const TimeGrid grid = TimeGrid::uniform(101);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const FunctionalCurve f =
        fit_fn(codec, [](double t) { return std::sin(2.0 * std::numbers::pi * t); });
    const FunctionalCurve g =
        fit_fn(codec, [](double t) { return std::sin(2.0 * std::numbers::pi * t + 0.4) * 0.8; });
    const Eigen::VectorXd fv = f.on_grid(grid), gv = g.on_grid(grid);

    const int replicates = 30;
    std::vector<double> log_m, log_sd;
    std::uint64_t seed = 1000;
    for (int m : {10, 100, 1000}) {
        std::vector<double> dists;
        for (int r = 0; r < replicates; ++r) {
            const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, m, seed++);
            dists.push_back(ens.distance_values(fv, gv));
        }
        double mean = 0.0;
        for (double d : dists) mean += d;
        mean /= replicates;
        double var = 0.0;
        for (double d : dists) var += (d - mean) * (d - mean);
        var /= (replicates - 1);
        log_m.push_back(std::log10(static_cast<double>(m)));
        log_sd.push_back(0.5 * std::log10(var));
    }
    // least-squares slope over the three decades
    const double xbar = (log_m[0] + log_m[1] + log_m[2]) / 3.0;
    const double ybar = (log_sd[0] + log_sd[1] + log_sd[2]) / 3.0;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i) {
        num += (log_m[static_cast<std::size_t>(i)] - xbar) * (log_sd[static_cast<std::size_t>(i)] - ybar);
        den += (log_m[static_cast<std::size_t>(i)] - xbar) * (log_m[static_cast<std::size_t>(i)] - xbar);
    }
    const double slope = num / den;
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2)); // +-0.1 absolute
    CHECK(std::abs(slope + 0.5) < 0.1);
}

TEST_CASE("grid mismatch is rejected") {
    const TimeGrid grid = TimeGrid::uniform(31);
    const ProjectionEnsemble ens = ProjectionEnsemble::generate(grid, 4, 2);
    Eigen::VectorXd wrong(17);
    wrong.setZero();
    CHECK_THROWS_AS(ens.project_values(wrong), InvalidArgument);
    CHECK_THROWS_AS(ens.distance_values(wrong, wrong), InvalidArgument);
}
