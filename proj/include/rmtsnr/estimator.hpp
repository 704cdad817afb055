#pragma once

#include "rmtsnr/numerics.hpp"
#include "rmtsnr/rmt_core.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rmtsnr {

/// y = Psi^{1/2} wbar x0 + n with Psi known. Immutable; safe to share across threads.
///
/// The composed design W, its Gram matrix and W^T y are computed once at construction.
class LinearModel {
public:
    static constexpr double kMinAspect = 0.01;
    static constexpr double kMaxAspect = 100.0;

    LinearModel(std::shared_ptr<const CorrelationSpectrum> spectrum, DenseMatrix wbar,
                std::vector<double> y);

    std::size_t m() const noexcept { return wbar_.rows(); }
    std::size_t k() const noexcept { return wbar_.cols(); }

    const CorrelationSpectrum& spectrum() const noexcept { return *spectrum_; }
    const std::shared_ptr<const CorrelationSpectrum>& shared_spectrum() const noexcept {
        return spectrum_;
    }
    const DenseMatrix& wbar() const noexcept { return wbar_; }
    const DenseMatrix& w() const noexcept { return w_; }
    const std::vector<double>& y() const noexcept { return y_; }
    const DenseMatrix& gram() const noexcept { return gram_; }
    const std::vector<double>& wty() const noexcept { return wty_; }

private:
    std::shared_ptr<const CorrelationSpectrum> spectrum_;
    DenseMatrix wbar_;
    DenseMatrix w_;
    std::vector<double> y_;
    DenseMatrix gram_;
    std::vector<double> wty_;
};

struct RidgeSolution {
    double lambda = 0.0;
    std::vector<double> x_hat;
    double phi = 0.0; ///< (||y - W x_hat||^2 + lambda ||x_hat||^2) / K
};

/// Ridge estimate (W^T W + lambda I)^{-1} W^T y and its normalized cost.
RidgeSolution ridge_solve(const LinearModel& model, double lambda);

/// (||y - W x||^2 + lambda ||x||^2) / K for an arbitrary x.
double normalized_cost(const LinearModel& model, std::span<const double> x, double lambda);

/// Checks n >= 2 and that every lambda is positive, finite and distinct.
void validate_lambda_grid(std::span<const double> lambdas);

/// Deterministic-equivalent rows for a lambda grid. Depends only on the correlation
/// spectrum and (M, K), so Monte-Carlo callers compute it once per world.
std::vector<DeterministicEquivalents> regression_design(const CorrelationSpectrum& spec,
                                                        std::size_t m, std::size_t k,
                                                        std::span<const double> lambdas);

struct RegressionSystem {
    std::vector<double> lambdas;
    DenseMatrix xi; ///< n x 2 rows (xi1, xi2)
    std::vector<double> phi_vec;
    std::vector<double> residual; ///< phi - xi * sigma after the fit; empty before
    std::vector<std::size_t> fixed_point_iters;
};

RegressionSystem assemble_system(const LinearModel& model, std::span<const double> lambdas);
RegressionSystem assemble_system(const LinearModel& model,
                                 std::span<const DeterministicEquivalents> design);

enum class SnrStatus {
    kFinite,    ///< both variances positive
    kInfinite,  ///< noise variance estimate is zero
    kZero,      ///< signal variance estimate is zero
    kUndefined, ///< both estimates are zero
};

struct SnrDiagnostics {
    double fit_residual_norm = 0.0;
    std::vector<std::size_t> fixed_point_iters;
};

struct SnrEstimate {
    double sigma_x2_hat = 0.0;
    double sigma_n2_hat = 0.0;
    double snr_linear = 0.0;
    double snr_db = 0.0;
    SnrStatus status = SnrStatus::kFinite;
    SnrDiagnostics diagnostics;

    /// Usable in dB-domain statistics.
    bool degenerate() const noexcept { return status != SnrStatus::kFinite; }
};

/// Builds the estimate from a pair of variance estimates, setting status and dB value.
SnrEstimate make_estimate(double sigma_x2_hat, double sigma_n2_hat);

/// Blind SNR estimate from the ridge costs at several regularization levels.
SnrEstimate estimate_snr(const LinearModel& model, std::span<const double> lambdas);
SnrEstimate estimate_snr(const LinearModel& model,
                         std::span<const DeterministicEquivalents> design);

enum class NoiseDivisor {
    kSampleCount,  ///< ||r||^2 / M, the maximum-likelihood estimate
    kResidualDof,  ///< ||r||^2 / (M - K), unbiased; only meaningful for M > K
};

struct MlOptions {
    NoiseDivisor divisor = NoiseDivisor::kSampleCount;
    double lambda = 1e-10;
    int refinement_steps = 2;
};

/// Least-squares noise-variance baseline combined with a known signal variance.
///
/// For M > K the regularized solve is refined toward the exact least-squares
/// solution and a residual below 1e-12 ||y|| counts as an exact fit. For M <= K the
/// lightly regularized solve stands in for the minimum-norm solution and the noise
/// estimate is ||r||^2 / M regardless of the divisor option.
SnrEstimate ml_baseline(const LinearModel& model, double true_sigma_x2,
                        const MlOptions& options = {});

} // namespace rmtsnr
