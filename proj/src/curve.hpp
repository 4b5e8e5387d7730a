#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bspline.hpp"
#include "time_grid.hpp"

namespace fhm {

/// A real-valued function on [0, 1] stored as coefficients over a B-spline
/// basis. Immutable after construction; safe to share across threads.
class FunctionalCurve {
public:
    FunctionalCurve(std::shared_ptr<const BSplineBasis> basis, Eigen::VectorXd coefficients);

    double operator()(double t) const;
    Eigen::VectorXd evaluate(const std::vector<double>& times) const;
    Eigen::VectorXd on_grid(const TimeGrid& grid) const { return evaluate(grid.points()); }

    /// Exact derivative, expressed in the order-1 basis. Requires order >= 3.
    FunctionalCurve derivative() const;

    const Eigen::VectorXd& coefficients() const { return coef_; }
    const BSplineBasis& basis() const { return *basis_; }
    const std::shared_ptr<const BSplineBasis>& basis_ptr() const { return basis_; }

private:
    std::shared_ptr<const BSplineBasis> basis_;
    Eigen::VectorXd coef_;
};

/// Penalized least-squares fitter for a fixed basis and fixed sample times.
/// Factorizes the normal system once; fit() is then a cheap solve, which is
/// what ensemble construction and per-candidate resampling need.
class CurveFitter {
public:
    CurveFitter(std::shared_ptr<const BSplineBasis> basis, const std::vector<double>& times,
                double penalty);

    FunctionalCurve fit(const Eigen::VectorXd& values) const;

    /// size() x len(times) linear map from sample values to coefficients.
    Eigen::MatrixXd fit_operator() const;

    const BSplineBasis& basis() const { return *basis_; }

private:
    std::shared_ptr<const BSplineBasis> basis_;
    Eigen::MatrixXd design_t_;          // basis^T evaluated at the sample times
    Eigen::LDLT<Eigen::MatrixXd> normal_;
};

/// One-off penalized fit of scattered (time, value) samples.
FunctionalCurve fit_curve(const std::vector<std::pair<double, double>>& samples,
                          std::shared_ptr<const BSplineBasis> basis, double penalty);

/// Default roughness penalty used when none is configured.
inline constexpr double kDefaultPenalty = 1e-6;

/// Bundles the grid/basis pair shared by a whole run, with the linear maps
/// between grid values and curves precomputed:
///   fit:        grid values -> curve
///   values:     curve -> grid values
///   derivative_map: grid values -> derivative values on the same grid
class CurveCodec {
public:
    CurveCodec(TimeGrid grid, std::shared_ptr<const BSplineBasis> basis,
               double penalty = kDefaultPenalty);

    const TimeGrid& grid() const { return grid_; }
    const std::shared_ptr<const BSplineBasis>& basis() const { return basis_; }

    FunctionalCurve fit(const Eigen::VectorXd& grid_values) const;
    Eigen::VectorXd values(const FunctionalCurve& curve) const { return curve.on_grid(grid_); }

    /// q x q map sending grid values of a curve to grid values of the
    /// derivative of its fitted spline.
    const Eigen::MatrixXd& derivative_map() const { return deriv_map_; }

private:
    TimeGrid grid_;
    std::shared_ptr<const BSplineBasis> basis_;
    CurveFitter fitter_;
    Eigen::MatrixXd deriv_map_;
};

/// Reads a `time,value` CSV (lines starting with '#' are ignored), rescales
/// times affinely onto [0, 1], and returns the samples plus the original
/// interval [t_begin, t_end].
struct GaugeSeries {
    std::vector<std::pair<double, double>> samples; // times already in [0, 1]
    double t_begin = 0.0;
    double t_end = 1.0;
};
GaugeSeries read_gauge_csv(const std::string& path);

/// Writes a `time,value` CSV in original time units with a provenance line.
void write_gauge_csv(const std::string& path, const std::vector<double>& times,
                     const Eigen::VectorXd& values, const std::string& provenance);

} // namespace fhm
