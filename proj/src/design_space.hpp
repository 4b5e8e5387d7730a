#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace fhm {

struct Dimension {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::string unit; // free-text metadata
};

/// Axis-aligned input hyperbox.
class ParameterSpace {
public:
    /// Empty placeholder; every validated construction path goes through the
    /// vector constructor or from_json.
    ParameterSpace() = default;

    explicit ParameterSpace(std::vector<Dimension> dims);

    int size() const { return static_cast<int>(dims_.size()); }
    const Dimension& dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
    const std::vector<Dimension>& dims() const { return dims_; }

    bool contains(const Eigen::VectorXd& point, double tol = 0.0) const;

    /// Affine map onto [-1, 1]^P; errors if the point is outside the box.
    Eigen::VectorXd to_unit(const Eigen::VectorXd& point) const;
    /// Inverse of to_unit; errors if the coordinates leave [-1, 1].
    Eigen::VectorXd from_unit(const Eigen::VectorXd& unit) const;

    /// Same affine map without the containment check, for callers that must
    /// handle extrapolation themselves.
    Eigen::VectorXd affine_to_unit(const Eigen::VectorXd& point) const;

    double volume() const;

    nlohmann::json to_json() const;
    static ParameterSpace from_json(const nlohmann::json& j);

private:
    std::vector<Dimension> dims_;
};

/// A set of design points drawn from a parameter space.
struct DesignMatrix {
    ParameterSpace space;
    Eigen::MatrixXd points; // N x P, every row inside the box
};

/// Latin hypercube design: in every dimension exactly one point per stratum,
/// uniformly jittered inside it. Deterministic per seed.
DesignMatrix latin_hypercube(const ParameterSpace& space, int n, std::uint64_t seed);

/// Smallest axis-aligned box containing the rows of `points`; degenerate
/// dimensions are widened symmetrically to width 1e-9. Names and units come
/// from `like`.
ParameterSpace bounding_box(const ParameterSpace& like, const Eigen::MatrixXd& points);

/// Per-dimension intersection of two boxes over the same dimensions.
ParameterSpace intersect(const ParameterSpace& a, const ParameterSpace& b);

} // namespace fhm
