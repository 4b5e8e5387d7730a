#pragma once

#include <Eigen/Core>
#include <vector>

namespace fhm {

/// Shared evaluation grid on the normalized interval [0, 1].
///
/// Every curve in a run (observations, ensemble members, emulated means,
/// projection paths) is compared on one of these grids, so the class
/// enforces the invariants the rest of the pipeline relies on: strictly
/// increasing points, endpoints exactly 0 and 1, at least 4 points.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> points);

    /// Uniform grid with `count` points, count >= 4.
    static TimeGrid uniform(int count);

    const std::vector<double>& points() const { return points_; }
    int count() const { return static_cast<int>(points_.size()); }
    double point(int i) const { return points_[static_cast<std::size_t>(i)]; }

    /// Trapezoid quadrature weights over [0, 1].
    const Eigen::VectorXd& trapezoid_weights() const { return weights_; }

    bool operator==(const TimeGrid& other) const { return points_ == other.points_; }

private:
    std::vector<double> points_;
    Eigen::VectorXd weights_;
};

} // namespace fhm
