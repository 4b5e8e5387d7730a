#include "curve.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace fhm {

FunctionalCurve::FunctionalCurve(std::shared_ptr<const BSplineBasis> basis,
                                 Eigen::VectorXd coefficients)
    : basis_(std::move(basis)), coef_(std::move(coefficients)) {
    require(basis_ != nullptr, "curve: null basis");
    require(coef_.size() == basis_->size(), "curve: coefficient count must match basis size");
}

double FunctionalCurve::operator()(double t) const {
    int first = 0;
    Eigen::VectorXd local;
    basis_->evaluate_span(t, 0, first, local);
    return local.dot(coef_.segment(first, basis_->order()));
}

Eigen::VectorXd FunctionalCurve::evaluate(const std::vector<double>& times) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(times.size()));
    int first = 0;
    Eigen::VectorXd local;
    for (std::size_t i = 0; i < times.size(); ++i) {
        basis_->evaluate_span(times[i], 0, first, local);
        out[static_cast<Eigen::Index>(i)] = local.dot(coef_.segment(first, basis_->order()));
    }
    return out;
}

FunctionalCurve FunctionalCurve::derivative() const {
    require(basis_->order() >= 3, "curve: derivative requires basis order >= 3");
    const int k = basis_->order();
    const int n = basis_->size();
    const auto& knots = basis_->knots();
    Eigen::VectorXd dcoef(n - 1);
    for (int i = 1; i < n; ++i) {
        const double gap = knots[static_cast<std::size_t>(i + k - 1)] - knots[static_cast<std::size_t>(i)];
        dcoef[i - 1] = gap > 0.0 ? (k - 1) * (coef_[i] - coef_[i - 1]) / gap : 0.0;
    }
    auto derived = std::make_shared<const BSplineBasis>(basis_->derivative_basis());
    return FunctionalCurve(std::move(derived), std::move(dcoef));
}

CurveFitter::CurveFitter(std::shared_ptr<const BSplineBasis> basis,
                         const std::vector<double>& times, double penalty)
    : basis_(std::move(basis)) {
    require(basis_ != nullptr, "fit: null basis");
    require(penalty >= 0.0, "fit: penalty must be nonnegative");
    require(static_cast<int>(times.size()) >= basis_->size(),
            "fit: underdetermined, need at least as many samples as basis functions");
    const Eigen::MatrixXd design = basis_->design_matrix(times);
    design_t_ = design.transpose();
    Eigen::MatrixXd normal = design_t_ * design;
    if (penalty > 0.0) normal += penalty * basis_->roughness_matrix();
    normal_.compute(normal);
    const Eigen::VectorXd d = normal_.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (normal_.info() != Eigen::Success || !(dmax > 0.0) ||
        d.cwiseAbs().minCoeff() <= 1e-13 * dmax) {
        throw NumericError("fit: singular normal system (degenerate sample times?)");
    }
}

FunctionalCurve CurveFitter::fit(const Eigen::VectorXd& values) const {
    require(values.size() == design_t_.cols(), "fit: value count must match sample times");
    return FunctionalCurve(basis_, normal_.solve(design_t_ * values));
}

Eigen::MatrixXd CurveFitter::fit_operator() const {
    return normal_.solve(design_t_);
}

FunctionalCurve fit_curve(const std::vector<std::pair<double, double>>& samples,
                          std::shared_ptr<const BSplineBasis> basis, double penalty) {
    std::vector<double> times(samples.size());
    Eigen::VectorXd values(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        require(samples[i].first >= 0.0 && samples[i].first <= 1.0,
                "fit: sample times must lie in [0, 1]");
        times[i] = samples[i].first;
        values[static_cast<Eigen::Index>(i)] = samples[i].second;
    }
    return CurveFitter(std::move(basis), times, penalty).fit(values);
}

CurveCodec::CurveCodec(TimeGrid grid, std::shared_ptr<const BSplineBasis> basis, double penalty)
    : grid_(std::move(grid)),
      basis_(std::move(basis)),
      fitter_(basis_, grid_.points(), penalty) {
    // derivative-on-grid = eval(derivative basis) . diff(coeffs) . fit
    const Eigen::MatrixXd fit_op = fitter_.fit_operator();
    const int k = basis_->order();
    const int n = basis_->size();
    const auto& knots = basis_->knots();
    Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(n - 1, n);
    for (int i = 1; i < n; ++i) {
        const double gap = knots[static_cast<std::size_t>(i + k - 1)] - knots[static_cast<std::size_t>(i)];
        if (gap > 0.0) {
            diff(i - 1, i) = (k - 1) / gap;
            diff(i - 1, i - 1) = -(k - 1) / gap;
        }
    }
    const BSplineBasis derived = basis_->derivative_basis();
    deriv_map_ = derived.design_matrix(grid_.points()) * diff * fit_op;
}

FunctionalCurve CurveCodec::fit(const Eigen::VectorXd& grid_values) const {
    return fitter_.fit(grid_values);
}

GaugeSeries read_gauge_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open gauge CSV: " + path);
    GaugeSeries series;
    std::vector<std::pair<double, double>> raw;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("time", 0) == 0) continue; // header row
        }
        std::istringstream row(line);
        std::string t_str, v_str;
        if (!std::getline(row, t_str, ',') || !std::getline(row, v_str, ',')) {
            throw IoError("malformed gauge CSV row in " + path + ": " + line);
        }
        raw.emplace_back(std::stod(t_str), std::stod(v_str));
    }
    if (raw.size() < 2) throw IoError("gauge CSV has fewer than 2 samples: " + path);
    series.t_begin = raw.front().first;
    series.t_end = raw.back().first;
    require(series.t_end > series.t_begin, "gauge CSV times must be increasing: " + path);
    const double span = series.t_end - series.t_begin;
    series.samples.reserve(raw.size());
    for (const auto& [t, v] : raw) {
        series.samples.emplace_back((t - series.t_begin) / span, v);
    }
    series.samples.front().first = 0.0;
    series.samples.back().first = 1.0;
    return series;
}

void write_gauge_csv(const std::string& path, const std::vector<double>& times,
                     const Eigen::VectorXd& values, const std::string& provenance) {
    require(static_cast<Eigen::Index>(times.size()) == values.size(),
            "gauge CSV: times and values must align");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write gauge CSV: " + path);
    out.precision(17);
    if (!provenance.empty()) out << "# " << provenance << "\n";
    out << "time,value\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << times[i] << "," << values[static_cast<Eigen::Index>(i)] << "\n";
    }
}

} // namespace fhm
