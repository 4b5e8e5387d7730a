#include "design_space.hpp"

#include <algorithm>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"

namespace fhm {

namespace {
constexpr double kDegenerateWidth = 1e-9;
}

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    require(!dims_.empty(), "parameter space: need at least one dimension");
    for (const auto& d : dims_) {
        require(d.lo < d.hi, "parameter space: lower bound must be below upper bound for '" +
                                 d.name + "'");
    }
}

bool ParameterSpace::contains(const Eigen::VectorXd& point, double tol) const {
    if (point.size() != size()) return false;
    for (int i = 0; i < size(); ++i) {
        const auto& d = dims_[static_cast<std::size_t>(i)];
        const double slack = tol * (d.hi - d.lo);
        if (point[i] < d.lo - slack || point[i] > d.hi + slack) return false;
    }
    return true;
}

Eigen::VectorXd ParameterSpace::to_unit(const Eigen::VectorXd& point) const {
    require(point.size() == size(), "to_unit: dimension mismatch");
    require(contains(point), "to_unit: point outside the parameter box");
    return affine_to_unit(point);
}

Eigen::VectorXd ParameterSpace::affine_to_unit(const Eigen::VectorXd& point) const {
    require(point.size() == size(), "to_unit: dimension mismatch");
    Eigen::VectorXd unit(size());
    for (int i = 0; i < size(); ++i) {
        const auto& d = dims_[static_cast<std::size_t>(i)];
        unit[i] = 2.0 * (point[i] - d.lo) / (d.hi - d.lo) - 1.0;
    }
    return unit;
}

Eigen::VectorXd ParameterSpace::from_unit(const Eigen::VectorXd& unit) const {
    require(unit.size() == size(), "from_unit: dimension mismatch");
    Eigen::VectorXd point(size());
    for (int i = 0; i < size(); ++i) {
        require(unit[i] >= -1.0 && unit[i] <= 1.0, "from_unit: coordinate outside [-1, 1]");
        const auto& d = dims_[static_cast<std::size_t>(i)];
        point[i] = d.lo + 0.5 * (unit[i] + 1.0) * (d.hi - d.lo);
    }
    return point;
}

double ParameterSpace::volume() const {
    double v = 1.0;
    for (const auto& d : dims_) v *= (d.hi - d.lo);
    return v;
}

nlohmann::json ParameterSpace::to_json() const {
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& d : dims_) {
        nlohmann::json jd = {{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}};
        if (!d.unit.empty()) jd["unit"] = d.unit;
        dims.push_back(std::move(jd));
    }
    return {{"dims", dims}};
}

ParameterSpace ParameterSpace::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("dims") || !j["dims"].is_array()) {
        throw ConfigError("parameter space JSON must be an object with a 'dims' array");
    }
    std::vector<Dimension> dims;
    for (const auto& jd : j["dims"]) {
        Dimension d;
        d.name = jd.at("name").get<std::string>();
        d.lo = jd.at("lo").get<double>();
        d.hi = jd.at("hi").get<double>();
        if (jd.contains("unit")) d.unit = jd["unit"].get<std::string>();
        dims.push_back(std::move(d));
    }
    return ParameterSpace(std::move(dims));
}

DesignMatrix latin_hypercube(const ParameterSpace& space, int n, std::uint64_t seed) {
    require(n >= 1, "latin hypercube: sample count must be positive");
    const int p = space.size();
    Eigen::MatrixXd points(n, p);
    Rng rng(seed);
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (int j = 0; j < p; ++j) {
        std::iota(strata.begin(), strata.end(), 0);
        rng.shuffle(strata);
        const auto& d = space.dim(j);
        const double width = (d.hi - d.lo) / static_cast<double>(n);
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            points(i, j) = d.lo + (static_cast<double>(strata[static_cast<std::size_t>(i)]) + u) * width;
        }
    }
    return DesignMatrix{space, std::move(points)};
}

ParameterSpace bounding_box(const ParameterSpace& like, const Eigen::MatrixXd& points) {
    require(points.rows() >= 1, "bounding box: empty point set");
    require(points.cols() == like.size(), "bounding box: dimension mismatch");
    std::vector<Dimension> dims = like.dims();
    for (int j = 0; j < like.size(); ++j) {
        double lo = points.col(j).minCoeff();
        double hi = points.col(j).maxCoeff();
        if (hi - lo < kDegenerateWidth) {
            const double mid = 0.5 * (lo + hi);
            lo = mid - 0.5 * kDegenerateWidth;
            hi = mid + 0.5 * kDegenerateWidth;
        }
        dims[static_cast<std::size_t>(j)].lo = lo;
        dims[static_cast<std::size_t>(j)].hi = hi;
    }
    return ParameterSpace(std::move(dims));
}

ParameterSpace intersect(const ParameterSpace& a, const ParameterSpace& b) {
    require(a.size() == b.size(), "intersect: dimension mismatch");
    std::vector<Dimension> dims = a.dims();
    for (int j = 0; j < a.size(); ++j) {
        auto& d = dims[static_cast<std::size_t>(j)];
        d.lo = std::max(d.lo, b.dim(j).lo);
        d.hi = std::min(d.hi, b.dim(j).hi);
        if (d.lo >= d.hi) {
            const double mid = 0.5 * (d.lo + d.hi);
            d.lo = mid - 0.5 * kDegenerateWidth;
            d.hi = mid + 0.5 * kDegenerateWidth;
        }
    }
    return ParameterSpace(std::move(dims));
}

} // namespace fhm
