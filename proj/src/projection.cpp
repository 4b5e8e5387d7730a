#include "projection.hpp"

#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace fhm {

ProjectionEnsemble::ProjectionEnsemble(TimeGrid grid, Eigen::MatrixXd paths, std::uint64_t seed)
    : grid_(std::move(grid)), paths_(std::move(paths)), seed_(seed) {
    require(paths_.rows() >= 1, "projection: ensemble must contain at least one path");
    op_ = paths_ * grid_.trapezoid_weights().asDiagonal();
}

ProjectionEnsemble ProjectionEnsemble::generate(const TimeGrid& grid, int count,
                                                std::uint64_t seed) {
    require(count >= 1, "projection: path count must be positive");
    const int q = grid.count();
    Eigen::MatrixXd paths(count, q);
    Rng rng(seed);
    for (int m = 0; m < count; ++m) {
        paths(m, 0) = 0.0;
        for (int j = 1; j < q; ++j) {
            const double dt = grid.point(j) - grid.point(j - 1);
            paths(m, j) = paths(m, j - 1) + std::sqrt(dt) * rng.normal();
        }
    }
    return ProjectionEnsemble(grid, std::move(paths), seed);
}

double ProjectionEnsemble::project(const FunctionalCurve& curve, int path_index) const {
    require(path_index >= 0 && path_index < count(), "projection: path index out of range");
    return op_.row(path_index).dot(curve.on_grid(grid_));
}

Eigen::VectorXd ProjectionEnsemble::project_values(const Eigen::VectorXd& grid_values) const {
    require(grid_values.size() == grid_.count(),
            "projection: grid mismatch between curve values and ensemble");
    return op_ * grid_values;
}

Eigen::VectorXd ProjectionEnsemble::project_all(const FunctionalCurve& curve) const {
    return op_ * curve.on_grid(grid_);
}

double ProjectionEnsemble::distance(const FunctionalCurve& f, const FunctionalCurve& g) const {
    return distance_values(f.on_grid(grid_), g.on_grid(grid_));
}

double ProjectionEnsemble::distance_values(const Eigen::VectorXd& f_values,
                                           const Eigen::VectorXd& g_values) const {
    require(f_values.size() == g_values.size() && f_values.size() == grid_.count(),
            "projection: grid mismatch between curves and ensemble");
    return (op_ * (f_values - g_values)).cwiseAbs().mean();
}

} // namespace fhm
