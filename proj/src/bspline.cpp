#include "bspline.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace fhm {
namespace {

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
}

} // namespace

BSplineBasis::BSplineBasis(int order, std::vector<double> interior) : order_(order) {
    require(order >= 2, "bspline: order must be >= 2");
    for (std::size_t i = 0; i < interior.size(); ++i) {
        require(interior[i] > 0.0 && interior[i] < 1.0,
                "bspline: interior knots must lie in (0, 1)");
        if (i > 0) require(interior[i] >= interior[i - 1], "bspline: knots must be nondecreasing");
    }
    n_basis_ = static_cast<int>(interior.size()) + order;
    knots_.reserve(static_cast<std::size_t>(n_basis_ + order));
    knots_.insert(knots_.end(), static_cast<std::size_t>(order), 0.0);
    knots_.insert(knots_.end(), interior.begin(), interior.end());
    knots_.insert(knots_.end(), static_cast<std::size_t>(order), 1.0);
}

BSplineBasis BSplineBasis::uniform(int order, int n_interior) {
    require(n_interior >= 0, "bspline: interior knot count must be nonnegative");
    std::vector<double> interior(static_cast<std::size_t>(n_interior));
    for (int i = 0; i < n_interior; ++i) {
        interior[static_cast<std::size_t>(i)] =
            static_cast<double>(i + 1) / static_cast<double>(n_interior + 1);
    }
    return BSplineBasis(order, std::move(interior));
}

std::shared_ptr<const BSplineBasis> BSplineBasis::cubic_default() {
    static const auto basis = std::make_shared<const BSplineBasis>(uniform(4, 25));
    return basis;
}

int BSplineBasis::find_span(double t) const {
    // Largest span index i with knots[i] <= t < knots[i+1], clamped so the
    // right endpoint t = 1 lands in the last nonempty span.
    const int lo = order_ - 1;
    const int hi = n_basis_ - 1;
    if (t >= knots_[static_cast<std::size_t>(n_basis_)]) return hi;
    const auto begin = knots_.begin() + lo;
    const auto end = knots_.begin() + hi + 1;
    const auto it = std::upper_bound(begin, end, t);
    return static_cast<int>(it - knots_.begin()) - 1;
}

void BSplineBasis::evaluate_span(double t, int deriv, int& first, Eigen::VectorXd& values) const {
    require(t >= 0.0 && t <= 1.0, "bspline: evaluation point outside [0, 1]");
    require(deriv >= 0, "bspline: derivative order must be nonnegative");
    const int k = order_;
    const int span = find_span(t);
    first = span - k + 1;
    values.resize(k);
    if (deriv >= k) {
        values.setZero();
        return;
    }

    // Triangular table of all lower-order basis values at t (NURBS book A2.3).
    Eigen::MatrixXd ndu(k, k);
    std::vector<double> left(static_cast<std::size_t>(k)), right(static_cast<std::size_t>(k));
    ndu(0, 0) = 1.0;
    for (int j = 1; j < k; ++j) {
        left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        ndu(j, j) = saved;
    }
    if (deriv == 0) {
        for (int j = 0; j < k; ++j) values[j] = ndu(j, k - 1);
        return;
    }

    Eigen::MatrixXd a(2, k);
    for (int r = 0; r < k; ++r) {
        int s1 = 0, s2 = 1;
        a(0, 0) = 1.0;
        double der = 0.0;
        for (int d = 1; d <= deriv; ++d) {
            der = 0.0;
            const int rk = r - d;
            const int pk = k - 1 - d;
            if (r >= d) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                der = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? d - 1 : k - 1 - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                der += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, d) = -a(s1, d - 1) / ndu(pk + 1, r);
                der += a(s2, d) * ndu(r, pk);
            }
            std::swap(s1, s2);
        }
        values[r] = der;
    }
    double factor = static_cast<double>(k - 1);
    for (int d = 2; d <= deriv; ++d) factor *= static_cast<double>(k - d);
    values *= factor;
}

Eigen::VectorXd BSplineBasis::evaluate_all(double t, int deriv) const {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_basis_);
    int first = 0;
    Eigen::VectorXd local;
    evaluate_span(t, deriv, first, local);
    row.segment(first, order_) = local;
    return row;
}

Eigen::MatrixXd BSplineBasis::design_matrix(const std::vector<double>& times, int deriv) const {
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), n_basis_);
    int first = 0;
    Eigen::VectorXd local;
    for (std::size_t i = 0; i < times.size(); ++i) {
        evaluate_span(times[i], deriv, first, local);
        design.block(static_cast<Eigen::Index>(i), first, 1, order_) = local.transpose();
    }
    return design;
}

Eigen::MatrixXd BSplineBasis::roughness_matrix() const {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n_basis_, n_basis_);
    if (order_ < 3) return omega;

    // Second derivatives are piecewise polynomials of degree order-3, so
    // order-2 Gauss points per span integrate their products exactly.
    const int n_gauss = std::max(2, order_ - 2);
    std::vector<double> nodes, weights;
    gauss_legendre(n_gauss, nodes, weights);

    int first = 0;
    Eigen::VectorXd local;
    for (int span = order_ - 1; span < n_basis_; ++span) {
        const double lo = knots_[static_cast<std::size_t>(span)];
        const double hi = knots_[static_cast<std::size_t>(span + 1)];
        if (hi - lo <= 0.0) continue;
        for (int g = 0; g < n_gauss; ++g) {
            const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[static_cast<std::size_t>(g)];
            const double w = 0.5 * (hi - lo) * weights[static_cast<std::size_t>(g)];
            evaluate_span(t, 2, first, local);
            omega.block(first, first, order_, order_) += w * local * local.transpose();
        }
    }
    return omega;
}

BSplineBasis BSplineBasis::derivative_basis() const {
    require(order_ >= 3, "bspline: derivative basis requires order >= 3");
    BSplineBasis derived;
    derived.order_ = order_ - 1;
    derived.n_basis_ = n_basis_ - 1;
    derived.knots_.assign(knots_.begin() + 1, knots_.end() - 1);
    return derived;
}

} // namespace fhm
