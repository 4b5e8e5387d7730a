#include <doctest.h>

#include <cmath>

#include "errors.hpp"
#include "reporting.hpp"
#include "rng.hpp"

using namespace fhm;

namespace {

/// Independent brute-force modified band depth: literal triple loop over
/// pairs, membership checks written out directly.
Eigen::VectorXd depth_oracle(const Eigen::MatrixXd& curves) {
    const int n = static_cast<int>(curves.rows());
    const int q = static_cast<int>(curves.cols());
    Eigen::VectorXd depth = Eigen::VectorXd::Zero(n);
    int pairs = 0;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            ++pairs;
            for (int c = 0; c < n; ++c) {
                int inside = 0;
                for (int j = 0; j < q; ++j) {
                    const double lo = std::min(curves(a, j), curves(b, j));
                    const double hi = std::max(curves(a, j), curves(b, j));
                    if (curves(c, j) >= lo && curves(c, j) <= hi) ++inside;
                }
                depth[c] += static_cast<double>(inside) / q;
            }
        }
    }
    return depth / pairs;
}

} // namespace

TEST_CASE("middle constant curve has strictly maximal depth") {
    Eigen::MatrixXd curves(3, 10);
    curves.row(0).setConstant(0.0);
    curves.row(1).setConstant(1.0);
    curves.row(2).setConstant(2.0);
    const Eigen::VectorXd d = band_depth(curves);
    CHECK(d[1] > d[0]);
    CHECK(d[1] > d[2]);
    CHECK(d[0] == doctest::Approx(d[2]));
    CHECK_THROWS_AS(band_depth(curves.topRows(2)), InvalidArgument);
}

TEST_CASE("duplicate curves receive equal depth") {
    Eigen::MatrixXd curves(4, 8);
    for (int j = 0; j < 8; ++j) {
        curves(0, j) = std::sin(0.8 * j);
        curves(1, j) = std::sin(0.8 * j);
        curves(2, j) = 0.5 * j;
        curves(3, j) = -1.0;
    }
    const Eigen::VectorXd d = band_depth(curves);
    CHECK(d[0] == doctest::Approx(d[1]).epsilon(1e-14));
}

TEST_CASE("band depth matches the brute-force oracle exactly on random curves") {
    Rng rng(37);
    Eigen::MatrixXd curves(20, 15);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 15; ++j) curves(i, j) = rng.normal();
    }
    const Eigen::VectorXd fast = band_depth(curves);
    const Eigen::VectorXd slow = depth_oracle(curves);
    CHECK((fast - slow).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("boxplot flags the planted outlier and only it") {
    Rng rng(8);
    const int n = 24, q = 40;
    Eigen::MatrixXd curves(n, q);
    for (int i = 0; i < n; ++i) {
        const double shift = 0.05 * (i - n / 2);
        for (int j = 0; j < q; ++j) {
            const double t = static_cast<double>(j) / (q - 1);
            curves(i, j) = std::sin(6.0 * t) + shift;
        }
    }
    // plant one grossly shifted curve
    for (int j = 0; j < q; ++j) curves(n - 1, j) += 25.0;
    const FunctionalBoxplot box = functional_boxplot(curves);
    REQUIRE(box.outliers.size() == 1);
    CHECK(box.outliers[0] == n - 1);

    // central region within the envelope, median within the central region
    for (int j = 0; j < q; ++j) {
        CHECK(box.envelope_lo[j] <= box.central_lo[j] + 1e-12);
        CHECK(box.envelope_hi[j] >= box.central_hi[j] - 1e-12);
        CHECK(box.central_lo[j] <= box.median[j] + 1e-12);
        CHECK(box.central_hi[j] >= box.median[j] - 1e-12);
    }
    // the median curve attains the maximal depth
    CHECK(box.depths[box.median_index] == doctest::Approx(box.depths.maxCoeff()));
}

TEST_CASE("identical curves give a zero-width central region and no outliers") {
    Eigen::MatrixXd curves(5, 12);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 12; ++j) curves(i, j) = 0.3 * j;
    }
    const FunctionalBoxplot box = functional_boxplot(curves);
    CHECK(box.outliers.empty());
    CHECK((box.central_hi - box.central_lo).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("envelope area: single curve, two constants, monotone growth") {
    const TimeGrid grid = TimeGrid::uniform(21);
    Eigen::MatrixXd one(1, 21);
    one.setConstant(4.2);
    CHECK(envelope_area(one, grid) == 0.0);

    Eigen::MatrixXd two(2, 21);
    two.row(0).setConstant(0.0);
    two.row(1).setConstant(2.0);
    CHECK(envelope_area(two, grid) == doctest::Approx(2.0).epsilon(1e-10));

    Rng rng(4);
    Eigen::MatrixXd grow(6, 21);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 21; ++j) grow(i, j) = rng.normal();
    }
    double prev = 0.0;
    for (int k = 1; k <= 6; ++k) {
        const double area = envelope_area(grow.topRows(k), grid);
        CHECK(area >= prev - 1e-14);
        prev = area;
    }
}

TEST_CASE("band depth is permutation-equivariant") {
    Rng rng(9);
    Eigen::MatrixXd curves(7, 11);
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 11; ++j) curves(i, j) = rng.normal();
    }
    const Eigen::VectorXd base = band_depth(curves);
    Eigen::MatrixXd swapped = curves;
    swapped.row(2).swap(swapped.row(5));
    const Eigen::VectorXd after = band_depth(swapped);
    CHECK(after[2] == doctest::Approx(base[5]).epsilon(1e-14));
    CHECK(after[5] == doctest::Approx(base[2]).epsilon(1e-14));
}

TEST_CASE("parameter summary quartiles and bounds") {
    const ParameterSpace space({{"a", 0.0, 10.0, ""}, {"b", -1.0, 1.0, ""}});
    Eigen::MatrixXd pts(5, 2);
    pts << 1.0, -0.5, 2.0, 0.0, 3.0, 0.5, 4.0, 0.2, 5.0, -0.2;
    const auto summaries = parameter_summary(pts, space, 16);
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].min == 1.0);
    CHECK(summaries[0].max == 5.0);
    CHECK(summaries[0].q50 == doctest::Approx(3.0));
    CHECK(summaries[0].min >= space.dim(0).lo);
    CHECK(summaries[0].max <= space.dim(0).hi);

    Eigen::MatrixXd single(1, 2);
    single << 2.0, 0.0;
    const auto s1 = parameter_summary(single, space, 8);
    CHECK(s1[0].q25 == s1[0].q50);
    CHECK(s1[0].q50 == s1[0].q75);

    CHECK_THROWS_AS(parameter_summary(Eigen::MatrixXd(0, 2), space, 8), InvalidArgument);
}
