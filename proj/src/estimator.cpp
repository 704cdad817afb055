#include "rmtsnr/estimator.hpp"

#include "rmtsnr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rmtsnr {

LinearModel::LinearModel(std::shared_ptr<const CorrelationSpectrum> spectrum, DenseMatrix wbar,
                         std::vector<double> y)
    : spectrum_(std::move(spectrum)), wbar_(std::move(wbar)), y_(std::move(y)) {
    if (!spectrum_) throw ConfigError("LinearModel: missing correlation spectrum");
    const std::size_t rows = wbar_.rows();
    const std::size_t cols = wbar_.cols();
    if (rows == 0 || cols == 0) throw DimensionError("LinearModel: empty design matrix");
    if (spectrum_->dim() != rows) {
        throw DimensionError("LinearModel: correlation dimension " +
                             std::to_string(spectrum_->dim()) + " does not match M = " +
                             std::to_string(rows));
    }
    if (y_.size() != rows) {
        throw DimensionError("LinearModel: y has length " + std::to_string(y_.size()) +
                             ", expected M = " + std::to_string(rows));
    }
    const double aspect = static_cast<double>(cols) / static_cast<double>(rows);
    if (aspect < kMinAspect || aspect > kMaxAspect) {
        throw ConfigError("LinearModel: K/M = " + std::to_string(aspect) +
                          " outside [0.01, 100]");
    }
    if (!wbar_.all_finite() ||
        !std::all_of(y_.begin(), y_.end(), [](double v) { return std::isfinite(v); })) {
        throw ConfigError("LinearModel: non-finite input");
    }

    w_ = spectrum_->apply_sqrt(wbar_);
    gram_ = rmtsnr::gram(w_);
    wty_ = matvec_transposed(w_, y_);
}

namespace {

DenseMatrix shifted_gram(const LinearModel& model, double lambda) {
    DenseMatrix a = model.gram();
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
    return a;
}

std::vector<double> residual(const LinearModel& model, std::span<const double> x) {
    std::vector<double> r = matvec(model.w(), x);
    const auto& y = model.y();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
    return r;
}

} // namespace

double normalized_cost(const LinearModel& model, std::span<const double> x, double lambda) {
    if (x.size() != model.k()) throw DimensionError("normalized_cost: x has wrong length");
    const std::vector<double> r = residual(model, x);
    return (squared_norm(r) + lambda * squared_norm(x)) / static_cast<double>(model.k());
}

RidgeSolution ridge_solve(const LinearModel& model, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ConfigError("ridge_solve: lambda must be positive and finite");
    RidgeSolution out;
    out.lambda = lambda;
    out.x_hat = Cholesky(shifted_gram(model, lambda)).solve(model.wty());
    out.phi = normalized_cost(model, out.x_hat, lambda);
    return out;
}

void validate_lambda_grid(std::span<const double> lambdas) {
    if (lambdas.size() < 2) throw ConfigError("lambda grid needs at least 2 values");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i]))
            throw ConfigError("lambda grid values must be positive and finite");
        for (std::size_t j = 0; j < i; ++j)
            if (lambdas[i] == lambdas[j])
                throw ConfigError("lambda grid contains duplicate value " +
                                  std::to_string(lambdas[i]));
    }
}

std::vector<DeterministicEquivalents> regression_design(const CorrelationSpectrum& spec,
                                                        std::size_t m, std::size_t k,
                                                        std::span<const double> lambdas) {
    validate_lambda_grid(lambdas);
    std::vector<DeterministicEquivalents> rows;
    rows.reserve(lambdas.size());
    for (double lambda : lambdas) rows.push_back(coefficients(spec, m, k, lambda));
    return rows;
}

RegressionSystem assemble_system(const LinearModel& model, std::span<const double> lambdas) {
    const auto design = regression_design(model.spectrum(), model.m(), model.k(), lambdas);
    return assemble_system(model, design);
}

RegressionSystem assemble_system(const LinearModel& model,
                                 std::span<const DeterministicEquivalents> design) {
    std::vector<double> lambdas;
    for (const auto& d : design) lambdas.push_back(d.lambda);
    validate_lambda_grid(lambdas);

    RegressionSystem sys;
    sys.lambdas = lambdas;
    sys.xi = DenseMatrix(design.size(), 2);
    sys.phi_vec.resize(design.size());
    for (std::size_t i = 0; i < design.size(); ++i) {
        sys.xi(i, 0) = design[i].xi1;
        sys.xi(i, 1) = design[i].xi2;
        sys.phi_vec[i] = ridge_solve(model, design[i].lambda).phi;
        sys.fixed_point_iters.push_back(design[i].fixed_point_iters);
    }
    if (!sys.xi.all_finite()) throw NumericError("assemble_system: non-finite coefficients");
    return sys;
}

SnrEstimate make_estimate(double sigma_x2_hat, double sigma_n2_hat) {
    SnrEstimate e;
    e.sigma_x2_hat = sigma_x2_hat;
    e.sigma_n2_hat = sigma_n2_hat;
    const bool signal = sigma_x2_hat > 0.0;
    const bool noise = sigma_n2_hat > 0.0;
    if (signal && noise) {
        e.status = SnrStatus::kFinite;
        e.snr_linear = sigma_x2_hat / sigma_n2_hat;
        e.snr_db = 10.0 * std::log10(e.snr_linear);
    } else if (signal) {
        e.status = SnrStatus::kInfinite;
        e.snr_linear = std::numeric_limits<double>::infinity();
        e.snr_db = std::numeric_limits<double>::infinity();
    } else if (noise) {
        e.status = SnrStatus::kZero;
        e.snr_linear = 0.0;
        e.snr_db = -std::numeric_limits<double>::infinity();
    } else {
        e.status = SnrStatus::kUndefined;
        e.snr_linear = std::numeric_limits<double>::quiet_NaN();
        e.snr_db = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

SnrEstimate estimate_snr(const LinearModel& model, std::span<const double> lambdas) {
    const auto design = regression_design(model.spectrum(), model.m(), model.k(), lambdas);
    return estimate_snr(model, design);
}

SnrEstimate estimate_snr(const LinearModel& model,
                         std::span<const DeterministicEquivalents> design) {
    RegressionSystem sys = assemble_system(model, design);
    const Nnls2Result fit = nnls_2var(sys.xi, sys.phi_vec);

    SnrEstimate e = make_estimate(fit.sigma[0], fit.sigma[1]);
    e.diagnostics.fit_residual_norm = fit.residual_norm;
    e.diagnostics.fixed_point_iters = std::move(sys.fixed_point_iters);
    return e;
}

SnrEstimate ml_baseline(const LinearModel& model, double true_sigma_x2, const MlOptions& options) {
    if (!(true_sigma_x2 >= 0.0)) throw ConfigError("ml_baseline: signal variance must be >= 0");
    if (!(options.lambda > 0.0)) throw ConfigError("ml_baseline: lambda must be positive");

    const std::size_t m = model.m();
    const std::size_t k = model.k();
    const Cholesky chol(shifted_gram(model, options.lambda));
    std::vector<double> x = chol.solve(model.wty());

    double rss;
    if (m > k) {
        // Iterated regularization converges to the unregularized LS solution.
        for (int step = 0; step < options.refinement_steps; ++step) {
            std::vector<double> gx = matvec(model.gram(), x);
            for (std::size_t i = 0; i < k; ++i) gx[i] = model.wty()[i] - gx[i];
            const std::vector<double> dx = chol.solve(gx);
            for (std::size_t i = 0; i < k; ++i) x[i] += dx[i];
        }
        rss = squared_norm(residual(model, x));
        if (rss <= 1e-24 * squared_norm(model.y())) rss = 0.0;
    } else {
        rss = squared_norm(residual(model, x));
    }

    double divisor = static_cast<double>(m);
    if (options.divisor == NoiseDivisor::kResidualDof && m > k) divisor = static_cast<double>(m - k);
    return make_estimate(true_sigma_x2, rss / divisor);
}

} // namespace rmtsnr
