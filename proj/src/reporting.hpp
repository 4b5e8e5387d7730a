#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "design_space.hpp"
#include "time_grid.hpp"

namespace fhm {

/// Modified band depth with two-curve bands: the depth of a curve is the
/// average over all curve pairs of the fraction of grid points at which it
/// lies inside the pair's pointwise envelope. Input rows are curves on a
/// shared grid.
Eigen::VectorXd band_depth(const Eigen::MatrixXd& curves);

struct FunctionalBoxplot {
    int median_index = 0;
    Eigen::VectorXd median;
    Eigen::VectorXd central_lo, central_hi; // envelope of the deepest 50%
    Eigen::VectorXd envelope_lo, envelope_hi; // envelope of non-outliers
    std::vector<int> outliers;
    Eigen::VectorXd depths;
};

/// Sun-Genton style functional boxplot: median = deepest curve, central
/// region = pointwise envelope of the deepest half, outliers = curves that
/// leave the fence (central region inflated by `fence` times its width).
FunctionalBoxplot functional_boxplot(const Eigen::MatrixXd& curves, double fence = 1.5);

/// Integral over [0, 1] of the pointwise (max - min) of the curve set.
double envelope_area(const Eigen::MatrixXd& curves, const TimeGrid& grid);

/// Per-dimension summary of an NROY candidate cloud for violin rendering.
struct DimensionSummary {
    std::string name;
    double min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0;
    std::vector<double> density_x; // evaluation points
    std::vector<double> density_y; // Gaussian KDE values
};

std::vector<DimensionSummary> parameter_summary(const Eigen::MatrixXd& points,
                                                const ParameterSpace& space,
                                                int density_points = 64);

/// CSV/SVG writers for forecast reports. All files start with a provenance
/// comment line.
void write_forecast_bands_csv(const std::string& path, const TimeGrid& grid,
                              const FunctionalBoxplot& box, const std::string& provenance);
void write_forecast_boxplot_svg(const std::string& path, const TimeGrid& grid,
                                const FunctionalBoxplot& box,
                                const Eigen::VectorXd* truth = nullptr,
                                const std::string& provenance = "");
void write_violin_csv(const std::string& path, const DimensionSummary& summary,
                      const std::string& provenance);

} // namespace fhm
