#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "time_grid.hpp"

using namespace fhm;

namespace {

std::vector<std::pair<double, double>> sample_function(int n, const std::function<double(double)>& f) {
    std::vector<std::pair<double, double>> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        samples.emplace_back(t, f(t));
    }
    return samples;
}

} // namespace

TEST_CASE("time grid validates its invariants") {
    CHECK_THROWS_AS(TimeGrid::uniform(3), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid({0.0, 0.5, 0.5, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(TimeGrid({0.1, 0.5, 0.7, 1.0}), InvalidArgument);
    const TimeGrid g = TimeGrid::uniform(5);
    CHECK(g.count() == 5);
    CHECK(g.point(0) == 0.0);
    CHECK(g.point(4) == 1.0);
    CHECK(g.trapezoid_weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("constant samples reproduce the constant exactly") {
    const auto basis = BSplineBasis::cubic_default();
    const auto curve = fit_curve(sample_function(100, [](double) { return 3.0; }), basis, 0.0);
    for (double t : {0.0, 0.17, 0.5, 0.83, 1.0}) {
        CHECK(curve(t) == doctest::Approx(3.0).epsilon(1e-10));
    }
}

TEST_CASE("cubic splines reproduce cubic polynomials") {
    const auto poly = [](double t) { return 2.0 - t + 3.0 * t * t - 1.5 * t * t * t; };
    const auto basis = std::make_shared<const BSplineBasis>(BSplineBasis::uniform(4, 7));
    const auto curve = fit_curve(sample_function(60, poly), basis, 0.0);
    for (int i = 0; i <= 50; ++i) {
        const double t = i / 50.0;
        CHECK(std::abs(curve(t) - poly(t)) < 1e-8);
    }
}

TEST_CASE("noisy sine fit tracks the truth and the dense oracle") {
    const double sigma = 0.05;
    Rng rng(1234);
    std::vector<std::pair<double, double>> samples;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        samples.emplace_back(t, std::sin(2.0 * std::numbers::pi * t) + sigma * rng.normal());
    }
    const auto basis = std::make_shared<const BSplineBasis>(BSplineBasis::uniform(4, 16)); // 20 basis fns
    REQUIRE(basis->size() == 20);
    const double penalty = 1e-4;
    const auto curve = fit_curve(samples, basis, penalty);

    double rmse = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double t = i / 399.0;
        const double err = curve(t) - std::sin(2.0 * std::numbers::pi * t);
        rmse += err * err;
    }
    rmse = std::sqrt(rmse / 400.0);
    CHECK(rmse < 0.05);

    // Independent penalized least-squares oracle on the same basis, solved
    // with a dense pseudo-inverse instead of the fitter's factorization.
    Eigen::MatrixXd design(n, basis->size());
    Eigen::VectorXd values(n);
    std::vector<double> times;
    for (int i = 0; i < n; ++i) {
        times.push_back(samples[static_cast<std::size_t>(i)].first);
        values[i] = samples[static_cast<std::size_t>(i)].second;
    }
    design = basis->design_matrix(times);
    const Eigen::MatrixXd normal = design.transpose() * design + penalty * basis->roughness_matrix();
    const Eigen::VectorXd oracle =
        normal.completeOrthogonalDecomposition().solve(design.transpose() * values);
    CHECK((oracle - curve.coefficients()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit errors") {
    const auto basis = BSplineBasis::cubic_default();
    CHECK_THROWS_AS(fit_curve(sample_function(10, [](double t) { return t; }), basis, 0.0),
                    InvalidArgument); // underdetermined: 10 < 29
    // all samples at one location -> singular normal system
    std::vector<std::pair<double, double>> degenerate(40, {0.5, 1.0});
    CHECK_THROWS_AS(fit_curve(degenerate, basis, 0.0), NumericError);
    CHECK_THROWS_AS(fit_curve(sample_function(40, [](double t) { return t; }), basis, -1.0),
                    InvalidArgument);
}

TEST_CASE("evaluate basics and domain errors") {
    const auto basis = BSplineBasis::cubic_default();
    const FunctionalCurve zero(basis, Eigen::VectorXd::Zero(basis->size()));
    CHECK(zero(0.3) == 0.0);
    CHECK_THROWS_AS(zero(1.5), InvalidArgument);
    CHECK_THROWS_AS(zero(-0.1), InvalidArgument);

    const auto linear = fit_curve(sample_function(50, [](double t) { return 2.0 * t; }), basis, 0.0);
    CHECK(linear(0.25) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("differentiate: constants, lines, sine") {
    const auto basis = BSplineBasis::cubic_default();
    const auto constant = fit_curve(sample_function(50, [](double) { return 4.0; }), basis, 0.0);
    const auto dconst = constant.derivative();
    CHECK(std::abs(dconst(0.4)) < 1e-10);

    const auto line = fit_curve(sample_function(50, [](double t) { return 2.0 * t + 1.0; }), basis, 0.0);
    const auto dline = line.derivative();
    for (double t : {0.0, 0.3, 0.9, 1.0}) CHECK(dline(t) == doctest::Approx(2.0).epsilon(1e-10));

    const auto sine =
        fit_curve(sample_function(200, [](double t) { return std::sin(2.0 * std::numbers::pi * t); }),
                  basis, 0.0);
    const auto dsine = sine.derivative();
    // finite-difference oracle on the fitted curve itself
    const double h = 1e-5;
    const double fd = (sine(2.0 * h) - sine(0.0)) / (2.0 * h); // one-sided interior shift at t=h
    CHECK(dsine(h) == doctest::Approx(fd).epsilon(1e-4));
    CHECK(dsine(0.0) == doctest::Approx(2.0 * std::numbers::pi).epsilon(0.02));

    const BSplineBasis quad = BSplineBasis::uniform(2, 3);
    const FunctionalCurve low(std::make_shared<const BSplineBasis>(quad),
                              Eigen::VectorXd::Ones(quad.size()));
    CHECK_THROWS_AS(low.derivative(), InvalidArgument);
}

TEST_CASE("fit is linear in the samples") {
    const auto basis = std::make_shared<const BSplineBasis>(BSplineBasis::uniform(4, 10));
    const auto f = [](double t) { return std::sin(5.0 * t) + 0.2 * t; };
    const auto g = [](double t) { return std::exp(-t) * std::cos(8.0 * t); };
    const double a = 1.7, b = -0.6;
    const auto cf = fit_curve(sample_function(80, f), basis, 1e-6);
    const auto cg = fit_curve(sample_function(80, g), basis, 1e-6);
    const auto cmix = fit_curve(
        sample_function(80, [&](double t) { return a * f(t) + b * g(t); }), basis, 1e-6);
    const Eigen::VectorXd expect = a * cf.coefficients() + b * cg.coefficients();
    CHECK((cmix.coefficients() - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("derivative of fitted polynomials matches the analytic derivative") {
    const auto basis = std::make_shared<const BSplineBasis>(BSplineBasis::uniform(4, 9));
    const auto poly = [](double t) { return 1.0 + 2.0 * t - 4.0 * t * t + 0.5 * t * t * t; };
    const auto dpoly = [](double t) { return 2.0 - 8.0 * t + 1.5 * t * t; };
    const auto curve = fit_curve(sample_function(60, poly), basis, 0.0);
    const auto deriv = curve.derivative();
    for (int i = 0; i <= 40; ++i) {
        const double t = i / 40.0;
        CHECK(std::abs(deriv(t) - dpoly(t)) < 1e-8);
    }
}

TEST_CASE("derivative agrees with central finite differences at interior points") {
    const auto basis = BSplineBasis::cubic_default();
    Rng rng(77);
    Eigen::VectorXd coef(basis->size());
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef[i] = rng.normal();
    const FunctionalCurve curve(basis, coef);
    const FunctionalCurve deriv = curve.derivative();
    const double h = 1e-5;
    for (double t : {0.11, 0.37, 0.52, 0.78, 0.93}) {
        const double fd = (curve(t + h) - curve(t - h)) / (2.0 * h);
        const double exact = deriv(t);
        CHECK(std::abs(fd - exact) <= 1e-4 * std::max(1.0, std::abs(exact)));
    }
}

TEST_CASE("codec derivative map matches curve differentiation") {
    const TimeGrid grid = TimeGrid::uniform(61);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    Rng rng(5);
    Eigen::VectorXd values(grid.count());
    for (int i = 0; i < grid.count(); ++i) values[i] = std::sin(7.0 * grid.point(i)) + 0.1 * rng.normal();
    const FunctionalCurve fitted = codec.fit(values);
    const Eigen::VectorXd via_map = codec.derivative_map() * values;
    const Eigen::VectorXd via_curve = fitted.derivative().on_grid(grid);
    CHECK((via_map - via_curve).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gauge CSV round trip rescales onto the unit interval") {
    const std::string path = "test_gauge_tmp.csv";
    std::vector<double> times = {120.0, 150.0, 180.0, 210.0, 240.0};
    Eigen::VectorXd values(5);
    values << 0.0, 1.0, -0.5, 0.25, 0.0;
    write_gauge_csv(path, times, values, "unit-test");
    const GaugeSeries series = read_gauge_csv(path);
    REQUIRE(series.samples.size() == 5);
    CHECK(series.t_begin == doctest::Approx(120.0));
    CHECK(series.t_end == doctest::Approx(240.0));
    CHECK(series.samples.front().first == 0.0);
    CHECK(series.samples.back().first == 1.0);
    CHECK(series.samples[1].first == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(series.samples[2].second == doctest::Approx(-0.5));
    std::remove(path.c_str());
}
