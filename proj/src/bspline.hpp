#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

namespace fhm {

/// Clamped B-spline basis on [0, 1].
///
/// The knot vector repeats 0 and 1 `order` times around the interior knots,
/// so the basis spans polynomials of degree order-1 and sums to one
/// everywhere on [0, 1]. size() = interior knot count + order.
class BSplineBasis {
public:
    /// `interior` must be nondecreasing and lie strictly inside (0, 1).
    BSplineBasis(int order, std::vector<double> interior);

    /// Uniformly spaced interior knots.
    static BSplineBasis uniform(int order, int n_interior);

    /// Library default: cubic splines over 25 uniform interior knots.
    static std::shared_ptr<const BSplineBasis> cubic_default();

    int order() const { return order_; }
    int size() const { return n_basis_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Values (or `deriv`-th derivatives) of the `order` basis functions that
    /// are nonzero at t. `first` receives the index of the first of them.
    void evaluate_span(double t, int deriv, int& first, Eigen::VectorXd& values) const;

    /// Dense row of all basis values (or derivatives) at t.
    Eigen::VectorXd evaluate_all(double t, int deriv = 0) const;

    /// len(times) x size() design matrix of basis values (or derivatives).
    Eigen::MatrixXd design_matrix(const std::vector<double>& times, int deriv = 0) const;

    /// Gram matrix of second derivatives, Omega_ij = int B_i'' B_j'' dt.
    /// Zero when order < 3.
    Eigen::MatrixXd roughness_matrix() const;

    /// Basis of order-1 on the same interior knots; hosts exact derivatives
    /// of curves expressed in this basis.
    BSplineBasis derivative_basis() const;

    bool operator==(const BSplineBasis& other) const {
        return order_ == other.order_ && knots_ == other.knots_;
    }

private:
    BSplineBasis() = default;
    int find_span(double t) const;

    int order_ = 0;
    int n_basis_ = 0;
    std::vector<double> knots_; // clamped, length n_basis_ + order_
};

} // namespace fhm
