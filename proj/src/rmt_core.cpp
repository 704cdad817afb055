#include "rmtsnr/rmt_core.hpp"

#include "rmtsnr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rmtsnr {

CorrelationSpectrum CorrelationSpectrum::from_matrix(const DenseMatrix& psi,
                                                     double floor_tolerance) {
    EigenPair eig = sym_eig(psi);
    const double top = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    const double floor = -floor_tolerance * std::max(top, 0.0);
    if (!eig.eigenvalues.empty() && eig.eigenvalues.back() < floor) {
        throw DefinitenessError("correlation matrix is indefinite: eigenvalue " +
                                std::to_string(eig.eigenvalues.back()) + " is below -" +
                                std::to_string(floor_tolerance) + " * q_max");
    }
    for (double& q : eig.eigenvalues) q = std::max(q, 0.0);

    CorrelationSpectrum out;
    out.q_ = std::move(eig.eigenvalues);
    out.basis_ = std::move(eig.eigenvectors);
    out.supplied_ = psi;
    out.diagonal_ = false;

    // Psi^{1/2} = U diag(sqrt q) U^T
    const std::size_t m = out.q_.size();
    DenseMatrix scaled = out.basis_;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) scaled(r, c) *= std::sqrt(out.q_[c]);
    out.sqrt_psi_ = multiply(scaled, out.basis_.transpose());
    out.finalize();
    return out;
}

CorrelationSpectrum CorrelationSpectrum::from_diagonal(std::vector<double> q) {
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] >= 0.0) || !std::isfinite(q[i])) {
            throw DefinitenessError("diagonal correlation entry " + std::to_string(i) +
                                    " is negative or non-finite");
        }
    }
    CorrelationSpectrum out;
    out.q_ = std::move(q);
    out.diagonal_ = true;
    out.finalize();
    return out;
}

void CorrelationSpectrum::finalize() {
    if (q_.empty()) throw DimensionError("correlation spectrum is empty");
    q_max_ = *std::max_element(q_.begin(), q_.end());
    trace_ = std::accumulate(q_.begin(), q_.end(), 0.0);
}

DenseMatrix CorrelationSpectrum::eigenbasis() const {
    return diagonal_ ? DenseMatrix::identity(q_.size()) : basis_;
}

void CorrelationSpectrum::validate_for(std::size_t k) const {
    if (k == 0) throw ConfigError("signal dimension K must be positive");
    if (!(trace_ / static_cast<double>(k) > 0.0))
        throw ConfigError("correlation matrix has zero normalized trace");
}

DenseMatrix CorrelationSpectrum::matrix() const {
    if (diagonal_) return DenseMatrix::diagonal(q_);
    const std::size_t m = q_.size();
    DenseMatrix scaled = basis_;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) scaled(r, c) *= q_[c];
    return multiply(scaled, basis_.transpose());
}

DenseMatrix CorrelationSpectrum::apply_sqrt(const DenseMatrix& wbar) const {
    if (wbar.rows() != q_.size()) {
        throw DimensionError("apply_sqrt: W has " + std::to_string(wbar.rows()) +
                             " rows, correlation has dimension " + std::to_string(q_.size()));
    }
    if (!diagonal_) return multiply(sqrt_psi_, wbar);
    DenseMatrix w = wbar;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double s = std::sqrt(q_[i]);
        for (double& v : w.row(i)) v *= s;
    }
    return w;
}

namespace {

// (1/K) sum q_i / (1 + c q_i) with c = t / (1 + t delta).
double fixed_point_map(const std::vector<double>& q, double k, double t, double delta) {
    const double c = t / (1.0 + t * delta);
    double s = 0.0;
    for (double qi : q) s += qi / (1.0 + c * qi);
    return s / k;
}

} // namespace

FixedPointResult solve_delta(const CorrelationSpectrum& spec, std::size_t k, double t,
                             const FixedPointOptions& options) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("solve_delta: t must be positive");
    spec.validate_for(k);

    const auto& q = spec.eigenvalues();
    const double kd = static_cast<double>(k);
    double delta = spec.trace() / kd;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        const double next = fixed_point_map(q, kd, t, delta);
        if (std::abs(next - delta) <= options.tolerance * std::max(delta, 1.0)) {
            return {next, it};
        }
        delta = next;
    }
    throw ConvergenceError("solve_delta: fixed point not reached after " +
                               std::to_string(options.max_iterations) + " iterations (t = " +
                               std::to_string(t) + ")",
                           delta, options.max_iterations);
}

double trace_psi_T(const CorrelationSpectrum& spec, double t, double delta) {
    const double c = t / (1.0 + t * delta);
    double s = 0.0;
    for (double qi : spec.eigenvalues()) s += qi / (1.0 + c * qi);
    return s;
}

DeterministicEquivalents coefficients(const CorrelationSpectrum& spec, std::size_t m,
                                      std::size_t k, double lambda,
                                      const FixedPointOptions& options) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ConfigError("coefficients: lambda must be positive and finite");
    if (m != spec.dim()) throw DimensionError("coefficients: M does not match correlation");

    DeterministicEquivalents d;
    d.lambda = lambda;
    d.t = static_cast<double>(k) / lambda;
    const FixedPointResult fp = solve_delta(spec, k, d.t, options);
    d.delta = fp.delta;
    d.fixed_point_iters = fp.iterations;
    d.trace_psi_T = trace_psi_T(spec, d.t, d.delta);

    const double denom = 1.0 + d.t * d.delta;
    const double kd = static_cast<double>(k);
    d.xi1 = d.trace_psi_T / denom;
    d.xi2 = static_cast<double>(m) / kd - d.t * d.trace_psi_T / (kd * denom);
    return d;
}

double alpha(const DeterministicEquivalents& coeffs, double sigma_x2, double sigma_n2) {
    return coeffs.xi1 * sigma_x2 + coeffs.xi2 * sigma_n2;
}

} // namespace rmtsnr
