#include "ope.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "json_util.hpp"

namespace fhm {

double kernel_theta(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& lengths) {
    require(a.size() == b.size() && a.size() == lengths.size(),
            "kernel_theta: dimension mismatch");
    double expo = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        require(lengths[j] > 0.0, "kernel_theta: correlation lengths must be positive");
        expo += std::pow(std::abs(a[j] - b[j]) / lengths[j], 1.5);
    }
    return std::exp(-expo);
}

double kernel_t(double a, double b, double length) {
    require(length > 0.0, "kernel_t: correlation length must be positive");
    return std::exp(-std::pow(std::abs(a - b) / length, 1.5));
}

RegressorSet::RegressorSet(int input_dim) : input_dim_(input_dim) {
    require(input_dim >= 1, "regressors: input dimension must be positive");
}

int RegressorSet::input_count() const {
    return 1 + 2 * input_dim_ + input_dim_ * (input_dim_ - 1) / 2;
}

Eigen::VectorXd RegressorSet::input_row(const Eigen::VectorXd& u) const {
    require(u.size() == input_dim_, "regressors: input dimension mismatch");
    Eigen::VectorXd row(input_count());
    int k = 0;
    row[k++] = 1.0;
    for (int j = 0; j < input_dim_; ++j) row[k++] = u[j];
    for (int j = 0; j < input_dim_; ++j) row[k++] = 0.5 * (3.0 * u[j] * u[j] - 1.0);
    for (int i = 0; i < input_dim_; ++i) {
        for (int j = i + 1; j < input_dim_; ++j) row[k++] = u[i] * u[j];
    }
    return row;
}

Eigen::MatrixXd RegressorSet::input_matrix(const Eigen::MatrixXd& unit_points) const {
    Eigen::MatrixXd g(unit_points.rows(), input_count());
    for (Eigen::Index i = 0; i < unit_points.rows(); ++i) {
        g.row(i) = input_row(unit_points.row(i).transpose()).transpose();
    }
    return g;
}

Eigen::VectorXd RegressorSet::output_row(double t) const {
    Eigen::VectorXd row(5);
    const double w = 2.0 * M_PI * t;
    row << 1.0, std::sin(w), std::cos(w), std::sin(2.0 * w), std::cos(2.0 * w);
    return row;
}

Eigen::MatrixXd RegressorSet::output_matrix(const TimeGrid& grid) const {
    Eigen::MatrixXd g(grid.count(), output_count());
    for (int i = 0; i < grid.count(); ++i) g.row(i) = output_row(grid.point(i)).transpose();
    return g;
}

NigPrior NigPrior::weakly_informative(int count) {
    NigPrior p;
    p.mean = Eigen::VectorXd::Zero(count);
    p.cov = 100.0 * Eigen::MatrixXd::Identity(count, count);
    p.shape = 2.0;
    p.scale = 1.0;
    return p;
}

namespace {

constexpr double kMaxJitter = 1e-4;

Eigen::MatrixXd kernel_matrix_theta(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lengths,
                                    double nugget) {
    const Eigen::Index n = unit.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 1.0 + nugget;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = kernel_theta(unit.row(i).transpose(), unit.row(j).transpose(), lengths);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::MatrixXd kernel_matrix_t(const TimeGrid& grid, double length, double nugget) {
    const int q = grid.count();
    Eigen::MatrixXd k(q, q);
    for (int i = 0; i < q; ++i) {
        k(i, i) = 1.0 + nugget;
        for (int j = i + 1; j < q; ++j) {
            const double v = kernel_t(grid.point(i), grid.point(j), length);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

struct CoreResult {
    NigPosterior posterior;
    double log_marginal = 0.0;
    double effective_jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt_theta;
    Eigen::LLT<Eigen::MatrixXd> llt_t;
    Eigen::MatrixXd k_t;
    Eigen::MatrixXd g_theta;
    Eigen::MatrixXd g_t;
    Eigen::MatrixXd a_theta;
};

CoreResult train_core(const RegressorSet& reg, const Eigen::MatrixXd& unit_design,
                      const TimeGrid& grid, const Eigen::MatrixXd& outputs,
                      const CovarianceHyper& hyper, const NigPrior& prior) {
    const Eigen::Index n_design = unit_design.rows();
    const int q = grid.count();
    const int nu_theta = reg.input_count();
    const int nu_t = reg.output_count();
    const int nu = nu_theta * nu_t;

    CoreResult res;

    // Factorize both kernel matrices, escalating the nugget tenfold on
    // failure up to kMaxJitter.
    double jitter = hyper.jitter;
    for (;;) {
        res.llt_theta.compute(kernel_matrix_theta(unit_design, hyper.input_lengths, jitter));
        if (res.llt_theta.info() == Eigen::Success) {
            res.k_t = kernel_matrix_t(grid, hyper.output_length, jitter);
            res.llt_t.compute(res.k_t);
            if (res.llt_t.info() == Eigen::Success) break;
        }
        const double next = jitter <= 0.0 ? 1e-12 : jitter * 10.0;
        if (next > kMaxJitter) {
            throw NumericError("ope: kernel factorization failed even at maximum jitter");
        }
        jitter = next;
    }
    res.effective_jitter = jitter;

    res.g_theta = reg.input_matrix(unit_design);
    res.g_t = reg.output_matrix(grid);
    res.a_theta = res.llt_theta.solve(res.g_theta);
    const Eigen::MatrixXd a_t = res.llt_t.solve(res.g_t);

    const Eigen::MatrixXd m_theta = res.g_theta.transpose() * res.a_theta; // nu_theta^2
    const Eigen::MatrixXd m_t = res.g_t.transpose() * a_t;                 // nu_t^2

    Eigen::MatrixXd gram(nu, nu); // G^T K^-1 G via the Kronecker factors
    for (int a = 0; a < nu_theta; ++a) {
        for (int b = 0; b < nu_theta; ++b) {
            gram.block(a * nu_t, b * nu_t, nu_t, nu_t) = m_theta(a, b) * m_t;
        }
    }

    // u = G^T K^-1 y, assembled as A_theta^T Y A_t and flattened row-major.
    const Eigen::MatrixXd su = res.a_theta.transpose() * outputs * a_t; // nu_theta x nu_t
    Eigen::VectorXd u(nu);
    for (int a = 0; a < nu_theta; ++a) u.segment(a * nu_t, nu_t) = su.row(a).transpose();

    // y^T K^-1 y without forming the flattened system.
    const Eigen::MatrixXd k_theta_inv_y = res.llt_theta.solve(outputs);
    const Eigen::MatrixXd k_inv_y = res.llt_t.solve(k_theta_inv_y.transpose()).transpose();
    const double quad_y = (outputs.array() * k_inv_y.array()).sum();

    Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.cov);
    if (prior_llt.info() != Eigen::Success) {
        throw InvalidArgument("ope: prior covariance must be positive definite");
    }
    const Eigen::MatrixXd v_inv =
        prior_llt.solve(Eigen::MatrixXd::Identity(nu, nu));
    Eigen::MatrixXd vn = v_inv + gram;
    vn = 0.5 * (vn + vn.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> vn_llt(vn);
    if (vn_llt.info() != Eigen::Success) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_theta(res.g_theta);
        if (qr_theta.rank() < nu_theta) {
            throw NumericError("ope: singular update, input regressor block is rank-deficient");
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_t(res.g_t);
        if (qr_t.rank() < nu_t) {
            throw NumericError("ope: singular update, output regressor block is rank-deficient");
        }
        throw NumericError("ope: singular posterior update");
    }

    const Eigen::VectorXd v_inv_m = v_inv * prior.mean;
    const Eigen::VectorXd rhs = v_inv_m + u;
    res.posterior.mean = vn_llt.solve(rhs);
    res.posterior.cov = vn_llt.solve(Eigen::MatrixXd::Identity(nu, nu));
    res.posterior.shape = prior.shape + 0.5 * static_cast<double>(n_design) * q;
    res.posterior.scale =
        prior.scale + 0.5 * (prior.mean.dot(v_inv_m) + quad_y - res.posterior.mean.dot(rhs));
    if (!(res.posterior.scale > 0.0)) {
        throw NumericError("ope: posterior scale collapsed; inputs are inconsistent");
    }

    // Marginal likelihood of the training block; the quadratic form folds
    // into the posterior scale (d + Q/2 = d*).
    const double n_total = static_cast<double>(n_design) * q;
    const double logdet_k =
        q * logdet_from_llt(res.llt_theta) + static_cast<double>(n_design) * logdet_from_llt(res.llt_t);
    const double logdet_v = 2.0 * prior_llt.matrixLLT().diagonal().array().log().sum();
    const double logdet_vn = 2.0 * vn_llt.matrixLLT().diagonal().array().log().sum();
    res.log_marginal = -0.5 * n_total * std::log(2.0 * M_PI) -
                       0.5 * (logdet_k + logdet_v + logdet_vn) + prior.shape * std::log(prior.scale) -
                       std::lgamma(prior.shape) + std::lgamma(res.posterior.shape) -
                       res.posterior.shape * std::log(res.posterior.scale);
    return res;
}

} // namespace

OpeModel::OpeModel(ParameterSpace space, TimeGrid grid)
    : space_(std::move(space)), grid_(std::move(grid)), regressors_(space_.size()) {}

OpeModel OpeModel::train(const ParameterSpace& space, const Eigen::MatrixXd& design,
                         const TimeGrid& grid, const Eigen::MatrixXd& outputs,
                         const CovarianceHyper& hyper, const NigPrior& prior) {
    require(design.rows() >= 1, "ope: empty design");
    require(design.cols() == space.size(), "ope: design dimension mismatch");
    require(outputs.rows() == design.rows(), "ope: ensemble rows must align with design rows");
    require(outputs.cols() == grid.count(), "ope: outputs must live on the shared grid");
    require(hyper.input_lengths.size() == space.size(), "ope: one input length per dimension");
    require((hyper.input_lengths.array() > 0.0).all(), "ope: input lengths must be positive");
    require(hyper.output_length > 0.0, "ope: output length must be positive");
    require(hyper.jitter >= 0.0, "ope: jitter must be nonnegative");
    require(prior.shape > 0.0 && prior.scale > 0.0, "ope: prior shape and scale must be positive");

    OpeModel model(space, grid);
    require(prior.mean.size() == model.regressors_.count() &&
                prior.cov.rows() == model.regressors_.count() &&
                prior.cov.cols() == model.regressors_.count(),
            "ope: prior dimensions must match the regressor count");
    model.design_ = design;
    model.outputs_ = outputs;
    model.hyper_ = hyper;
    model.prior_ = prior;

    model.design_unit_.resize(design.rows(), design.cols());
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        model.design_unit_.row(i) = space.affine_to_unit(design.row(i).transpose()).transpose();
    }

    CoreResult core =
        train_core(model.regressors_, model.design_unit_, grid, outputs, hyper, prior);
    model.hyper_.jitter = core.effective_jitter;
    model.posterior_ = std::move(core.posterior);
    model.log_marginal_ = core.log_marginal;
    model.llt_theta_ = std::move(core.llt_theta);
    model.k_t_ = std::move(core.k_t);
    model.l_t_ = core.llt_t.matrixL();
    model.g_theta_ = std::move(core.g_theta);
    model.g_t_ = std::move(core.g_t);
    model.a_theta_ = std::move(core.a_theta);

    const int nu_t = model.regressors_.output_count();
    model.mean_mat_.resize(model.regressors_.input_count(), nu_t);
    for (int a = 0; a < model.regressors_.input_count(); ++a) {
        model.mean_mat_.row(a) = model.posterior_.mean.segment(a * nu_t, nu_t).transpose();
    }
    model.residual_ = outputs - model.g_theta_ * model.mean_mat_ * model.g_t_.transpose();
    return model;
}

CovarianceHyper OpeModel::fit_hyper(const ParameterSpace& space, const Eigen::MatrixXd& design,
                                    const TimeGrid& grid, const Eigen::MatrixXd& outputs,
                                    const NigPrior& prior, double jitter,
                                    const HyperFitConfig& cfg) {
    require(!cfg.input_grid.empty() && !cfg.output_grid.empty(),
            "fit_hyper: candidate grids must be nonempty");
    const int p = space.size();
    RegressorSet reg(p);
    Eigen::MatrixXd unit(design.rows(), p);
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        unit.row(i) = space.affine_to_unit(design.row(i).transpose()).transpose();
    }

    CovarianceHyper current;
    current.input_lengths =
        Eigen::VectorXd::Constant(p, cfg.input_grid[cfg.input_grid.size() / 2]);
    current.output_length = cfg.output_grid[cfg.output_grid.size() / 2];
    current.jitter = jitter;

    const auto objective = [&](const CovarianceHyper& h) -> double {
        try {
            return train_core(reg, unit, grid, outputs, h, prior).log_marginal;
        } catch (const NumericError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    double best = objective(current);
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (int coord = 0; coord <= p; ++coord) {
            const auto& grid_values = (coord < p) ? cfg.input_grid : cfg.output_grid;
            CovarianceHyper trial = current;
            for (double value : grid_values) {
                if (coord < p) {
                    trial.input_lengths[coord] = value;
                } else {
                    trial.output_length = value;
                }
                const double score = objective(trial);
                if (score > best) {
                    best = score;
                    current = trial;
                }
            }
        }
    }
    if (!std::isfinite(best)) {
        throw NumericError("fit_hyper: no candidate hyperparameters produced a finite likelihood");
    }
    return current;
}

OpeModel::Predictive OpeModel::predictive(const Eigen::VectorXd& theta) const {
    require(theta.size() == space_.size(), "ope: input dimension mismatch");
    require(theta.allFinite(), "ope: non-finite input");
    const Eigen::VectorXd u = space_.affine_to_unit(theta);

    Predictive pred;
    pred.extrapolated = (u.array().abs() > 1.0 + 1e-9).any();
    pred.shape = posterior_.shape;
    pred.scale = posterior_.scale;

    const Eigen::Index n = design_unit_.rows();
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c[i] = kernel_theta(design_unit_.row(i).transpose(), u, hyper_.input_lengths);
    }
    if (!c.allFinite()) throw NumericError("ope: non-finite kernel distances");
    const Eigen::VectorXd w = llt_theta_.solve(c);

    const Eigen::VectorXd gstar = regressors_.input_row(u);
    pred.mean = g_t_ * (mean_mat_.transpose() * gstar) + residual_.transpose() * w;
    pred.alpha = std::max(0.0, 1.0 + hyper_.jitter - c.dot(w));

    // S = (r^T (x) I) V* (r (x) I): the regression part of the predictive
    // covariance collapses onto the output regressors.
    const Eigen::VectorXd r = gstar - a_theta_.transpose() * c;
    const int nu_theta = regressors_.input_count();
    const int nu_t = regressors_.output_count();
    Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(posterior_.cov.rows(), nu_t);
    for (int a = 0; a < nu_theta; ++a) tmp += r[a] * posterior_.cov.middleCols(a * nu_t, nu_t);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(nu_t, nu_t);
    for (int a = 0; a < nu_theta; ++a) s += r[a] * tmp.middleRows(a * nu_t, nu_t);
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    pred.s_half = eig.eigenvectors() *
                  eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    return pred;
}

OpeModel::Prediction OpeModel::predict(const Eigen::VectorXd& theta) const {
    const Predictive pred = predictive(theta);
    require(pred.shape > 1.0, "ope: predictive variance needs posterior shape > 1");
    const double scale = pred.scale / (pred.shape - 1.0);
    const Eigen::MatrixXd gs = g_t_ * pred.s_half;
    Prediction out;
    out.mean = pred.mean;
    out.variance = scale * (pred.alpha * k_t_.diagonal() + gs.cwiseProduct(gs).rowwise().sum());
    out.extrapolated = pred.extrapolated;
    return out;
}

FunctionalCurve OpeModel::predict_mean_curve(const Eigen::VectorXd& theta,
                                             const CurveCodec& codec) const {
    require(codec.grid() == grid_, "ope: codec grid must match the training grid");
    return codec.fit(predictive(theta).mean);
}

Eigen::MatrixXd OpeModel::sample_fluctuations(const Predictive& pred, int n, Rng& rng) const {
    require(n >= 1, "ope: sample count must be positive");
    const int q = grid_.count();
    const int nu_t = regressors_.output_count();
    const double sqrt_alpha = std::sqrt(pred.alpha);
    Eigen::MatrixXd out(q, n);
    Eigen::VectorXd xi_grid(q), xi_reg(nu_t), residual_part(q);
    for (int s = 0; s < n; ++s) {
        const double tau = rng.inverse_gamma(pred.shape, pred.scale);
        for (int i = 0; i < q; ++i) xi_grid[i] = rng.normal();
        for (int i = 0; i < nu_t; ++i) xi_reg[i] = rng.normal();
        residual_part.noalias() = l_t_.triangularView<Eigen::Lower>() * xi_grid;
        out.col(s) = std::sqrt(tau) * (sqrt_alpha * residual_part + g_t_ * (pred.s_half * xi_reg));
    }
    return out;
}

std::vector<FunctionalCurve> OpeModel::sample_curves(const Eigen::VectorXd& theta, int n,
                                                     std::uint64_t seed,
                                                     const CurveCodec& codec) const {
    require(codec.grid() == grid_, "ope: codec grid must match the training grid");
    const Predictive pred = predictive(theta);
    Rng rng(seed);
    const Eigen::MatrixXd fluct = sample_fluctuations(pred, n, rng);
    std::vector<FunctionalCurve> curves;
    curves.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        curves.push_back(codec.fit(pred.mean + fluct.col(s)));
    }
    return curves;
}

nlohmann::json OpeModel::to_json() const {
    std::vector<double> grid_points = grid_.points();
    return {{"format", "fhm-ope-model"},
            {"version", 1},
            {"space", space_.to_json()},
            {"grid", grid_points},
            {"design", matrix_to_json(design_)},
            {"outputs", matrix_to_json(outputs_)},
            {"hyper",
             {{"input_lengths", vector_to_json(hyper_.input_lengths)},
              {"output_length", hyper_.output_length},
              {"jitter", hyper_.jitter}}},
            {"prior",
             {{"mean", vector_to_json(prior_.mean)},
              {"cov", matrix_to_json(prior_.cov)},
              {"shape", prior_.shape},
              {"scale", prior_.scale}}},
            {"posterior",
             {{"mean", vector_to_json(posterior_.mean)},
              {"cov", matrix_to_json(posterior_.cov)},
              {"shape", posterior_.shape},
              {"scale", posterior_.scale}}},
            {"log_marginal", log_marginal_}};
}

OpeModel OpeModel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "fhm-ope-model") {
        throw ConfigError("ope: not a model JSON blob");
    }
    ParameterSpace space = ParameterSpace::from_json(j.at("space"));
    TimeGrid grid(j.at("grid").get<std::vector<double>>());
    OpeModel model(std::move(space), std::move(grid));
    model.design_ = matrix_from_json(j.at("design"));
    model.outputs_ = matrix_from_json(j.at("outputs"));
    const auto& jh = j.at("hyper");
    model.hyper_.input_lengths = vector_from_json(jh.at("input_lengths"));
    model.hyper_.output_length = jh.at("output_length").get<double>();
    model.hyper_.jitter = jh.at("jitter").get<double>();
    const auto& jp = j.at("prior");
    model.prior_.mean = vector_from_json(jp.at("mean"));
    model.prior_.cov = matrix_from_json(jp.at("cov"));
    model.prior_.shape = jp.at("shape").get<double>();
    model.prior_.scale = jp.at("scale").get<double>();
    const auto& jq = j.at("posterior");
    model.posterior_.mean = vector_from_json(jq.at("mean"));
    model.posterior_.cov = matrix_from_json(jq.at("cov"));
    model.posterior_.shape = jq.at("shape").get<double>();
    model.posterior_.scale = jq.at("scale").get<double>();
    model.log_marginal_ = j.at("log_marginal").get<double>();
    model.build_caches();
    return model;
}

void OpeModel::build_caches() {
    design_unit_.resize(design_.rows(), design_.cols());
    for (Eigen::Index i = 0; i < design_.rows(); ++i) {
        design_unit_.row(i) = space_.affine_to_unit(design_.row(i).transpose()).transpose();
    }
    llt_theta_.compute(kernel_matrix_theta(design_unit_, hyper_.input_lengths, hyper_.jitter));
    if (llt_theta_.info() != Eigen::Success) {
        throw NumericError("ope: stored model has a non-factorizable input kernel");
    }
    k_t_ = kernel_matrix_t(grid_, hyper_.output_length, hyper_.jitter);
    Eigen::LLT<Eigen::MatrixXd> llt_t(k_t_);
    if (llt_t.info() != Eigen::Success) {
        throw NumericError("ope: stored model has a non-factorizable output kernel");
    }
    l_t_ = llt_t.matrixL();
    g_theta_ = regressors_.input_matrix(design_unit_);
    g_t_ = regressors_.output_matrix(grid_);
    a_theta_ = llt_theta_.solve(g_theta_);
    const int nu_t = regressors_.output_count();
    mean_mat_.resize(regressors_.input_count(), nu_t);
    for (int a = 0; a < regressors_.input_count(); ++a) {
        mean_mat_.row(a) = posterior_.mean.segment(a * nu_t, nu_t).transpose();
    }
    residual_ = outputs_ - g_theta_ * mean_mat_ * g_t_.transpose();
}

} // namespace fhm
