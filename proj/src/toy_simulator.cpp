#include "toy_simulator.hpp"

#include <cmath>

#include "errors.hpp"
#include "parallel.hpp"

namespace fhm {

SourceParams SourceParams::from_vector(const Eigen::VectorXd& theta) {
    require(theta.size() == 5, "source params: expected 5 components (x0, y0, sx, sy, h)");
    SourceParams p;
    p.x0 = theta[0];
    p.y0 = theta[1];
    p.sx = theta[2];
    p.sy = theta[3];
    p.h = theta[4];
    return p;
}

Eigen::VectorXd simulate_values(const SourceParams& params, const Gauge& gauge,
                                const TimeGrid& grid, double wave_speed) {
    require(params.sx > 0.0 && params.sy > 0.0, "simulate: spreads must be positive");
    require(params.h > 0.0, "simulate: amplitude must be positive");
    require(wave_speed > 0.0, "simulate: wave speed must be positive");
    require(gauge.t_end > gauge.t_start, "simulate: empty arrival window for gauge " + gauge.name);

    const double dx = gauge.gx - params.x0;
    const double dy = gauge.gy - params.y0;
    const double r = std::sqrt(dx * dx + dy * dy);
    if (r <= 0.0) {
        throw InvalidArgument("simulate: gauge '" + gauge.name + "' coincides with the source midpoint");
    }

    const double amp = params.h * std::sqrt(params.sx * params.sy) / std::sqrt(r);
    const double sep = 3.5 * params.sy;
    const double inv2sx2 = 1.0 / (2.0 * params.sx * params.sx);
    const int q = grid.count();
    Eigen::VectorXd values(q);
    for (int i = 0; i < q; ++i) {
        const double tau = gauge.t_start + grid.point(i) * (gauge.t_end - gauge.t_start);
        const double phase = r - wave_speed * tau;
        const double lead = phase + sep;
        const double trail = phase - sep;
        values[i] = amp * (std::exp(-lead * lead * inv2sx2) - std::exp(-trail * trail * inv2sx2));
    }
    return values;
}

FunctionalCurve simulate(const SourceParams& params, const Gauge& gauge, const CurveCodec& codec,
                         double wave_speed) {
    return codec.fit(simulate_values(params, gauge, codec.grid(), wave_speed));
}

EnsembleTable run_ensemble(const DesignMatrix& design, const std::vector<Gauge>& gauges,
                           const CurveCodec& codec, double wave_speed, int workers) {
    const int n = static_cast<int>(design.points.rows());
    require(n >= 1, "run_ensemble: empty design");
    require(!gauges.empty(), "run_ensemble: no gauges");

    EnsembleTable table;
    table.rows = n;
    table.gauges = static_cast<int>(gauges.size());
    table.curves.reserve(static_cast<std::size_t>(n) * gauges.size());
    // Placeholder entries so worker threads can write slots independently.
    const FunctionalCurve blank(codec.basis(), Eigen::VectorXd::Zero(codec.basis()->size()));
    table.curves.assign(static_cast<std::size_t>(n) * gauges.size(), blank);

    parallel_for(static_cast<std::size_t>(n) * gauges.size(), workers, [&](std::size_t idx) {
        const int row = static_cast<int>(idx / gauges.size());
        const int g = static_cast<int>(idx % gauges.size());
        try {
            const SourceParams p = SourceParams::from_vector(design.points.row(row).transpose());
            table.curves[idx] = simulate(p, gauges[static_cast<std::size_t>(g)], codec, wave_speed);
        } catch (const Error& e) {
            throw InvalidArgument("run_ensemble: row " + std::to_string(row) + ", gauge '" +
                                  gauges[static_cast<std::size_t>(g)].name + "': " + e.what());
        }
    });
    return table;
}

} // namespace fhm
