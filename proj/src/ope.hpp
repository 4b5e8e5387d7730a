#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "curve.hpp"
#include "design_space.hpp"
#include "rng.hpp"
#include "time_grid.hpp"

namespace fhm {

/// Input-space correlation: product over dimensions of exp(-(|d|/len)^1.5).
double kernel_theta(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& lengths);

/// Output-index correlation: exp(-(|t - t'|/len)^1.5).
double kernel_t(double a, double b, double length);

/// Outer-product regressor bank: Legendre polynomials of total degree <= 2
/// on [-1, 1]^P for the inputs, a 5-term Fourier series (constant plus two
/// harmonics) on [0, 1] for the output index.
class RegressorSet {
public:
    explicit RegressorSet(int input_dim);

    int input_dim() const { return input_dim_; }
    int input_count() const;  // 1 + 2P + P(P-1)/2
    int output_count() const { return 5; }
    int count() const { return input_count() * output_count(); }

    Eigen::VectorXd input_row(const Eigen::VectorXd& unit_point) const;
    Eigen::MatrixXd input_matrix(const Eigen::MatrixXd& unit_points) const;
    Eigen::VectorXd output_row(double t) const;
    Eigen::MatrixXd output_matrix(const TimeGrid& grid) const;

private:
    int input_dim_;
};

/// Normal-Inverse-Gamma prior over regression weights and residual scale.
struct NigPrior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double shape = 2.0;
    double scale = 1.0;

    /// m = 0, V = 100 I, a = 2, d = 1.
    static NigPrior weakly_informative(int count);
};

struct NigPosterior {
    Eigen::VectorXd mean;  // length nu
    Eigen::MatrixXd cov;   // nu x nu, positive definite
    double shape = 0.0;
    double scale = 0.0;
};

struct CovarianceHyper {
    Eigen::VectorXd input_lengths; // one per input dimension, > 0
    double output_length = 0.2;    // > 0
    double jitter = 1e-8;          // nugget added to both factor matrices
};

struct HyperFitConfig {
    std::vector<double> input_grid = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> output_grid = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
    int sweeps = 2;
};

/// Trained outer-product emulator for one gauge.
///
/// The Bayesian linear model y ~ N(G beta, tau K) with G = G_theta (x) G_t and
/// K = K_theta (x) K_t is updated in conjugate NIG form without ever
/// assembling an (N q) x (N q) system: only K_theta (N x N) and K_t (q x q)
/// are factorized. Immutable after training; predictions may run
/// concurrently.
class OpeModel {
public:
    /// Joint predictive at one input, in tau-free form: given tau the output
    /// is N(mean, tau C) with C = alpha K_t + G_t S G_t^T, and tau is
    /// marginally IG(shape, scale).
    struct Predictive {
        Eigen::VectorXd mean;       // q
        double alpha = 0.0;         // residual scale after conditioning
        Eigen::MatrixXd s_half;     // nu_t x nu_t, S = s_half s_half^T
        double shape = 0.0;         // posterior IG shape
        double scale = 0.0;         // posterior IG scale
        bool extrapolated = false;  // input outside the training box
    };

    static OpeModel train(const ParameterSpace& space, const Eigen::MatrixXd& design,
                          const TimeGrid& grid, const Eigen::MatrixXd& outputs,
                          const CovarianceHyper& hyper, const NigPrior& prior);

    /// Maximizes the NIG marginal likelihood over log-spaced grids by
    /// coordinate descent (input lengths and output length).
    static CovarianceHyper fit_hyper(const ParameterSpace& space, const Eigen::MatrixXd& design,
                                     const TimeGrid& grid, const Eigen::MatrixXd& outputs,
                                     const NigPrior& prior, double jitter,
                                     const HyperFitConfig& cfg = HyperFitConfig());

    Predictive predictive(const Eigen::VectorXd& theta) const;

    /// Pointwise Student-t predictive mean and variance on the training grid.
    struct Prediction {
        Eigen::VectorXd mean;
        Eigen::VectorXd variance;
        bool extrapolated = false;
    };
    Prediction predict(const Eigen::VectorXd& theta) const;

    FunctionalCurve predict_mean_curve(const Eigen::VectorXd& theta, const CurveCodec& codec) const;

    /// q x n matrix of zero-mean fluctuation draws; column s is
    /// sqrt(tau_s) * C^{1/2} xi_s. Adding `pred.mean` gives predictive draws.
    Eigen::MatrixXd sample_fluctuations(const Predictive& pred, int n, Rng& rng) const;

    std::vector<FunctionalCurve> sample_curves(const Eigen::VectorXd& theta, int n,
                                               std::uint64_t seed, const CurveCodec& codec) const;

    const NigPosterior& posterior() const { return posterior_; }
    const CovarianceHyper& hyper() const { return hyper_; }
    const NigPrior& prior() const { return prior_; }
    const ParameterSpace& space() const { return space_; }
    const TimeGrid& grid() const { return grid_; }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::MatrixXd& outputs() const { return outputs_; }
    double log_marginal() const { return log_marginal_; }

    nlohmann::json to_json() const;
    static OpeModel from_json(const nlohmann::json& j);

private:
    OpeModel(ParameterSpace space, TimeGrid grid);
    void build_caches();

    ParameterSpace space_;
    TimeGrid grid_;
    RegressorSet regressors_;
    CovarianceHyper hyper_;
    NigPrior prior_;
    NigPosterior posterior_;
    Eigen::MatrixXd design_;   // N x P raw coordinates
    Eigen::MatrixXd outputs_;  // N x q training values
    double log_marginal_ = 0.0;

    // Caches rebuilt deterministically from the fields above.
    Eigen::MatrixXd design_unit_;  // N x P in [-1, 1]
    Eigen::MatrixXd g_theta_;      // N x nu_theta
    Eigen::MatrixXd g_t_;          // q x nu_t
    Eigen::LLT<Eigen::MatrixXd> llt_theta_;
    Eigen::MatrixXd k_t_;          // q x q with nugget
    Eigen::MatrixXd l_t_;          // chol factor of k_t_
    Eigen::MatrixXd a_theta_;      // K_theta^-1 G_theta
    Eigen::MatrixXd residual_;     // N x q, outputs minus fitted regression surface
    Eigen::MatrixXd mean_mat_;     // nu_theta x nu_t reshaped posterior mean
};

} // namespace fhm
