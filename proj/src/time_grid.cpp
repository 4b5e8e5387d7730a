#include "time_grid.hpp"

#include <cmath>

#include "errors.hpp"

namespace fhm {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    require(points_.size() >= 4, "time grid: need at least 4 points");
    require(std::abs(points_.front()) <= 1e-12, "time grid: first point must be 0");
    require(std::abs(points_.back() - 1.0) <= 1e-12, "time grid: last point must be 1");
    points_.front() = 0.0;
    points_.back() = 1.0;
    for (std::size_t i = 1; i < points_.size(); ++i) {
        require(points_[i] > points_[i - 1], "time grid: points must be strictly increasing");
    }
    const int q = count();
    weights_.resize(q);
    weights_.setZero();
    for (int i = 0; i + 1 < q; ++i) {
        const double h = points_[static_cast<std::size_t>(i + 1)] - points_[static_cast<std::size_t>(i)];
        weights_[i] += 0.5 * h;
        weights_[i + 1] += 0.5 * h;
    }
}

TimeGrid TimeGrid::uniform(int count) {
    require(count >= 4, "time grid: need at least 4 points");
    std::vector<double> pts(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        pts[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return TimeGrid(std::move(pts));
}

} // namespace fhm
