#include "reporting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "errors.hpp"

namespace fhm {

Eigen::VectorXd band_depth(const Eigen::MatrixXd& curves) {
    const int n = static_cast<int>(curves.rows());
    const int q = static_cast<int>(curves.cols());
    require(n >= 3, "band depth: need at least 3 curves");
    Eigen::VectorXd depth = Eigen::VectorXd::Zero(n);
    const double pairs = 0.5 * n * (n - 1);
    Eigen::VectorXd lo(q), hi(q);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            lo = curves.row(a).cwiseMin(curves.row(b)).transpose();
            hi = curves.row(a).cwiseMax(curves.row(b)).transpose();
            for (int c = 0; c < n; ++c) {
                int inside = 0;
                for (int j = 0; j < q; ++j) {
                    if (curves(c, j) >= lo[j] && curves(c, j) <= hi[j]) ++inside;
                }
                depth[c] += static_cast<double>(inside) / q;
            }
        }
    }
    return depth / pairs;
}

FunctionalBoxplot functional_boxplot(const Eigen::MatrixXd& curves, double fence) {
    const int n = static_cast<int>(curves.rows());
    require(n >= 4, "functional boxplot: need at least 4 curves");
    require(fence >= 0.0, "functional boxplot: fence factor must be nonnegative");

    FunctionalBoxplot box;
    box.depths = band_depth(curves);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return box.depths[a] > box.depths[b]; });
    box.median_index = order.front();
    box.median = curves.row(box.median_index).transpose();

    const int central_count = (n + 1) / 2;
    box.central_lo = curves.row(order[0]).transpose();
    box.central_hi = curves.row(order[0]).transpose();
    for (int r = 1; r < central_count; ++r) {
        box.central_lo = box.central_lo.cwiseMin(curves.row(order[static_cast<std::size_t>(r)]).transpose());
        box.central_hi = box.central_hi.cwiseMax(curves.row(order[static_cast<std::size_t>(r)]).transpose());
    }

    const Eigen::VectorXd width = box.central_hi - box.central_lo;
    const Eigen::VectorXd fence_lo = box.central_lo - fence * width;
    const Eigen::VectorXd fence_hi = box.central_hi + fence * width;
    for (int c = 0; c < n; ++c) {
        bool out = false;
        for (Eigen::Index j = 0; j < curves.cols() && !out; ++j) {
            out = curves(c, j) < fence_lo[j] || curves(c, j) > fence_hi[j];
        }
        if (out) box.outliers.push_back(c);
    }

    bool have_env = false;
    for (int c = 0; c < n; ++c) {
        if (std::binary_search(box.outliers.begin(), box.outliers.end(), c)) continue;
        if (!have_env) {
            box.envelope_lo = curves.row(c).transpose();
            box.envelope_hi = curves.row(c).transpose();
            have_env = true;
        } else {
            box.envelope_lo = box.envelope_lo.cwiseMin(curves.row(c).transpose());
            box.envelope_hi = box.envelope_hi.cwiseMax(curves.row(c).transpose());
        }
    }
    if (!have_env) { // everything flagged; fall back to the central band
        box.envelope_lo = box.central_lo;
        box.envelope_hi = box.central_hi;
    }
    return box;
}

double envelope_area(const Eigen::MatrixXd& curves, const TimeGrid& grid) {
    require(curves.rows() >= 1, "envelope area: need at least one curve");
    require(curves.cols() == grid.count(), "envelope area: grid mismatch");
    const Eigen::VectorXd width =
        (curves.colwise().maxCoeff() - curves.colwise().minCoeff()).transpose();
    return grid.trapezoid_weights().dot(width);
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    if (k + 1 >= n) return sorted[n - 1];
    return sorted[k] * (1.0 - frac) + sorted[k + 1] * frac;
}

} // namespace

std::vector<DimensionSummary> parameter_summary(const Eigen::MatrixXd& points,
                                                const ParameterSpace& space,
                                                int density_points) {
    require(points.rows() >= 1, "parameter summary: empty point set");
    require(points.cols() == space.size(), "parameter summary: dimension mismatch");
    require(density_points >= 2, "parameter summary: need at least 2 density points");

    std::vector<DimensionSummary> out;
    out.reserve(static_cast<std::size_t>(space.size()));
    const int n = static_cast<int>(points.rows());
    for (int j = 0; j < space.size(); ++j) {
        DimensionSummary s;
        s.name = space.dim(j).name;
        std::vector<double> vals(points.col(j).data(), points.col(j).data() + n);
        std::sort(vals.begin(), vals.end());
        s.min = vals.front();
        s.max = vals.back();
        s.q25 = quantile_sorted(vals, 0.25);
        s.q50 = quantile_sorted(vals, 0.50);
        s.q75 = quantile_sorted(vals, 0.75);

        // Silverman bandwidth Gaussian KDE over the dimension's box.
        const double mean = points.col(j).mean();
        const double sd = std::sqrt((points.col(j).array() - mean).square().sum() /
                                    std::max(1, n - 1));
        const double span = space.dim(j).hi - space.dim(j).lo;
        double bw = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
        if (!(bw > 0.0)) bw = 0.01 * span;
        s.density_x.resize(static_cast<std::size_t>(density_points));
        s.density_y.resize(static_cast<std::size_t>(density_points));
        for (int i = 0; i < density_points; ++i) {
            const double x = space.dim(j).lo + span * i / (density_points - 1);
            double acc = 0.0;
            for (double v : vals) {
                const double z = (x - v) / bw;
                acc += std::exp(-0.5 * z * z);
            }
            s.density_x[static_cast<std::size_t>(i)] = x;
            s.density_y[static_cast<std::size_t>(i)] =
                acc / (n * bw * std::sqrt(2.0 * M_PI));
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_forecast_bands_csv(const std::string& path, const TimeGrid& grid,
                              const FunctionalBoxplot& box, const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "time,median,central_lo,central_hi,envelope_lo,envelope_hi\n";
    for (int i = 0; i < grid.count(); ++i) {
        out << grid.point(i) << "," << box.median[i] << "," << box.central_lo[i] << ","
            << box.central_hi[i] << "," << box.envelope_lo[i] << "," << box.envelope_hi[i] << "\n";
    }
}

namespace {

void svg_polyline(std::ofstream& out, const TimeGrid& grid, const Eigen::VectorXd& ys,
                  double ymin, double yscale, const std::string& style) {
    out << "<polyline fill=\"none\" " << style << " points=\"";
    for (int i = 0; i < grid.count(); ++i) {
        const double px = 60.0 + 680.0 * grid.point(i);
        const double py = 440.0 - (ys[i] - ymin) * yscale;
        out << px << "," << py << " ";
    }
    out << "\"/>\n";
}

} // namespace

void write_forecast_boxplot_svg(const std::string& path, const TimeGrid& grid,
                                const FunctionalBoxplot& box, const Eigen::VectorXd* truth,
                                const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    if (!provenance.empty()) out << "<!-- " << provenance << " -->\n";
    double ymin = box.envelope_lo.minCoeff();
    double ymax = box.envelope_hi.maxCoeff();
    if (truth != nullptr) {
        ymin = std::min(ymin, truth->minCoeff());
        ymax = std::max(ymax, truth->maxCoeff());
    }
    const double pad = 0.05 * std::max(1e-12, ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double yscale = 400.0 / (ymax - ymin);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"780\" height=\"480\" "
           "viewBox=\"0 0 780 480\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"780\" height=\"480\" fill=\"white\"/>\n";

    // central band as a filled polygon
    out << "<polygon fill=\"#aecbe8\" stroke=\"none\" points=\"";
    for (int i = 0; i < grid.count(); ++i) {
        out << 60.0 + 680.0 * grid.point(i) << "," << 440.0 - (box.central_hi[i] - ymin) * yscale
            << " ";
    }
    for (int i = grid.count() - 1; i >= 0; --i) {
        out << 60.0 + 680.0 * grid.point(i) << "," << 440.0 - (box.central_lo[i] - ymin) * yscale
            << " ";
    }
    out << "\"/>\n";

    svg_polyline(out, grid, box.envelope_lo, ymin, yscale, "stroke=\"#4f81bd\" stroke-width=\"1\"");
    svg_polyline(out, grid, box.envelope_hi, ymin, yscale, "stroke=\"#4f81bd\" stroke-width=\"1\"");
    svg_polyline(out, grid, box.median, ymin, yscale, "stroke=\"black\" stroke-width=\"1.5\"");
    if (truth != nullptr) {
        svg_polyline(out, grid, *truth, ymin, yscale,
                     "stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6,3\"");
    }
    out << "<line x1=\"60\" y1=\"440\" x2=\"740\" y2=\"440\" stroke=\"black\"/>\n";
    out << "<line x1=\"60\" y1=\"40\" x2=\"60\" y2=\"440\" stroke=\"black\"/>\n";
    out << "<text x=\"400\" y=\"470\" text-anchor=\"middle\" font-size=\"14\">time "
           "(normalized)</text>\n";
    out << "</svg>\n";
}

void write_violin_csv(const std::string& path, const DimensionSummary& summary,
                      const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "# min=" << summary.min << " q25=" << summary.q25 << " q50=" << summary.q50
        << " q75=" << summary.q75 << " max=" << summary.max << "\n";
    out << "value,density\n";
    for (std::size_t i = 0; i < summary.density_x.size(); ++i) {
        out << summary.density_x[i] << "," << summary.density_y[i] << "\n";
    }
}

} // namespace fhm
