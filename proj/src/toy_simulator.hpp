#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "curve.hpp"
#include "design_space.hpp"
#include "time_grid.hpp"

namespace fhm {

/// Gaussian dipole source: midpoint, spreads, peak amplitude.
struct SourceParams {
    double x0 = 0.0;
    double y0 = 0.0;
    double sx = 1.0;
    double sy = 1.0;
    double h = 1.0;

    static SourceParams from_vector(const Eigen::VectorXd& theta);
};

/// A fixed recording location with its arrival window in simulation time.
struct Gauge {
    std::string name;
    double gx = 0.0;
    double gy = 0.0;
    double t_start = 0.0;
    double t_end = 1.0;
};

/// Closed-form ring wave recorded at a gauge: a radially expanding dipole
/// (leading trough, trailing peak separated by 7 * sy along the ray) with
/// 1/sqrt(r) geometric decay, sampled over the gauge's arrival window and
/// fitted on the shared grid. Deterministic.
Eigen::VectorXd simulate_values(const SourceParams& params, const Gauge& gauge,
                                const TimeGrid& grid, double wave_speed);

FunctionalCurve simulate(const SourceParams& params, const Gauge& gauge, const CurveCodec& codec,
                         double wave_speed);

/// Ensemble of curves indexed by (design row, gauge), row-major.
struct EnsembleTable {
    int rows = 0;
    int gauges = 0;
    std::vector<FunctionalCurve> curves;

    const FunctionalCurve& at(int row, int gauge) const {
        return curves[static_cast<std::size_t>(row) * static_cast<std::size_t>(gauges) +
                      static_cast<std::size_t>(gauge)];
    }
};

EnsembleTable run_ensemble(const DesignMatrix& design, const std::vector<Gauge>& gauges,
                           const CurveCodec& codec, double wave_speed, int workers = 1);

} // namespace fhm
