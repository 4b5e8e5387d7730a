#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "curve.hpp"
#include "time_grid.hpp"

namespace fhm {

/// M discretized Wiener paths on a shared grid, used to project curves to
/// scalars via trapezoid inner products. Immutable after generation; one
/// ensemble per wave is shared by every curve and gauge so that projected
/// distances are comparable.
class ProjectionEnsemble {
public:
    static ProjectionEnsemble generate(const TimeGrid& grid, int count, std::uint64_t seed);

    int count() const { return static_cast<int>(paths_.rows()); }
    const TimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    const Eigen::MatrixXd& paths() const { return paths_; }

    /// M x q operator: row m maps grid values to the projection <f, h_m>.
    const Eigen::MatrixXd& projection_operator() const { return op_; }

    /// Trapezoid quadrature of f * h_m over [0, 1].
    double project(const FunctionalCurve& curve, int path_index) const;
    Eigen::VectorXd project_values(const Eigen::VectorXd& grid_values) const;
    Eigen::VectorXd project_all(const FunctionalCurve& curve) const;

    /// Ensemble-averaged projected distance: mean over paths of
    /// |<f, h_m> - <g, h_m>|.
    double distance(const FunctionalCurve& f, const FunctionalCurve& g) const;
    double distance_values(const Eigen::VectorXd& f_values, const Eigen::VectorXd& g_values) const;

private:
    ProjectionEnsemble(TimeGrid grid, Eigen::MatrixXd paths, std::uint64_t seed);

    TimeGrid grid_;
    Eigen::MatrixXd paths_; // M x q
    Eigen::MatrixXd op_;    // paths * diag(trapezoid weights)
    std::uint64_t seed_;
};

} // namespace fhm
