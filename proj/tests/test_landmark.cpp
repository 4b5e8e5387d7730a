#include <doctest.h>

#include <cmath>
#include <numbers>

#include "curve.hpp"
#include "landmark.hpp"

using namespace fhm;

namespace {

FunctionalCurve fit_fn(const CurveCodec& codec, const std::function<double(double)>& f) {
    Eigen::VectorXd values(codec.grid().count());
    for (int i = 0; i < codec.grid().count(); ++i) values[i] = f(codec.grid().point(i));
    return codec.fit(values);
}

} // namespace

TEST_CASE("sine extrema land at the quarter points") {
    const TimeGrid grid = TimeGrid::uniform(241);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const FunctionalCurve sine =
        fit_fn(codec, [](double t) { return std::sin(2.0 * std::numbers::pi * t); });
    const LandmarkVector lm = extract_landmarks(sine, grid);
    CHECK(lm.max_value == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(lm.t_max == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(lm.min_value == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(lm.t_min == doctest::Approx(0.75).epsilon(1e-3));
}

TEST_CASE("constant curve keeps the first-occurrence tie rule") {
    const TimeGrid grid = TimeGrid::uniform(41);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const FunctionalCurve flat = fit_fn(codec, [](double) { return 2.5; });
    const LandmarkVector lm = extract_landmarks(flat, grid);
    CHECK(lm.max_value == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(lm.min_value == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(lm.t_max == 0.0);
    CHECK(lm.t_min == 0.0);
}

TEST_CASE("landmarks match a dense-scan oracle on a toy-like pulse") {
    const TimeGrid grid = TimeGrid::uniform(241);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const auto pulse = [](double t) {
        const double a = (t - 0.42) / 0.06;
        const double b = (t - 0.55) / 0.06;
        return 0.9 * std::exp(-0.5 * a * a) - 0.7 * std::exp(-0.5 * b * b);
    };
    const FunctionalCurve curve = fit_fn(codec, pulse);
    const LandmarkVector lm = extract_landmarks(curve, grid);

    double omax = -1e300, omin = 1e300, otmax = 0.0, otmin = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double t = i / 99999.0;
        const double v = curve(t);
        if (v > omax) {
            omax = v;
            otmax = t;
        }
        if (v < omin) {
            omin = v;
            otmin = t;
        }
    }
    CHECK(lm.max_value == doctest::Approx(omax).epsilon(1e-4));
    CHECK(lm.min_value == doctest::Approx(omin).epsilon(1e-4));
    CHECK(std::abs(lm.t_max - otmax) < 1e-4);
    CHECK(std::abs(lm.t_min - otmin) < 1e-4);
}

TEST_CASE("positive scaling scales extrema values and keeps their times") {
    const TimeGrid grid = TimeGrid::uniform(101);
    const CurveCodec codec(grid, BSplineBasis::cubic_default());
    const FunctionalCurve base = fit_fn(codec, [](double t) { return std::sin(5.0 * t) + 0.2; });
    const double alpha = 3.5;
    const FunctionalCurve scaled(codec.basis(), alpha * base.coefficients());
    const LandmarkVector a = extract_landmarks(base, grid);
    const LandmarkVector b = extract_landmarks(scaled, grid);
    CHECK(b.max_value == doctest::Approx(alpha * a.max_value).epsilon(1e-8));
    CHECK(b.min_value == doctest::Approx(alpha * a.min_value).epsilon(1e-8));
    CHECK(std::abs(b.t_max - a.t_max) < 1e-6);
    CHECK(std::abs(b.t_min - a.t_min) < 1e-6);
}
