#pragma once

#include "rmtsnr/numerics.hpp"

#include <cstddef>
#include <vector>

namespace rmtsnr {

/// Spectral form Psi = U diag(q) U^T of a nonnegative left correlation matrix.
///
/// Every trace functional downstream is evaluated on q alone, so Psi is never
/// inverted or re-multiplied. When built from a diagonal, U is the identity and is
/// not stored.
class CorrelationSpectrum {
public:
    /// Eigenvalues in [-floor_tolerance * q_max, 0) are set to zero; anything more
    /// negative throws DefinitenessError naming the offending eigenvalue.
    static CorrelationSpectrum from_matrix(const DenseMatrix& psi,
                                           double floor_tolerance = 1e-8);
    static CorrelationSpectrum from_diagonal(std::vector<double> q);

    std::size_t dim() const noexcept { return q_.size(); }
    const std::vector<double>& eigenvalues() const noexcept { return q_; }
    /// U; materializes the identity for diagonal spectra.
    DenseMatrix eigenbasis() const;
    bool is_diagonal() const noexcept { return diagonal_; }

    double q_max() const noexcept { return q_max_; }
    double trace() const noexcept { return trace_; }

    /// Throws ConfigError unless Tr(Q)/K > 0.
    void validate_for(std::size_t k) const;

    /// Psi reconstructed from its spectral form.
    DenseMatrix matrix() const;
    /// The dense matrix passed to from_matrix, before flooring; empty for diagonal spectra.
    const DenseMatrix& supplied_matrix() const noexcept { return supplied_; }
    /// Psi^{1/2} * wbar.
    DenseMatrix apply_sqrt(const DenseMatrix& wbar) const;

private:
    CorrelationSpectrum() = default;
    void finalize();

    std::vector<double> q_;
    DenseMatrix basis_;
    DenseMatrix supplied_;
    DenseMatrix sqrt_psi_;
    bool diagonal_ = false;
    double q_max_ = 0.0;
    double trace_ = 0.0;
};

struct FixedPointOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 10'000;
};

struct FixedPointResult {
    double delta = 0.0;
    std::size_t iterations = 0;
};

/// Positive root of delta = (1/K) sum_i q_i / (1 + t q_i / (1 + t delta)).
///
/// Picard iteration started from the normalized trace Tr(Q)/K. Stops once the
/// residual is within tolerance * max(delta, 1); throws ConvergenceError otherwise.
FixedPointResult solve_delta(const CorrelationSpectrum& spec, std::size_t k, double t,
                             const FixedPointOptions& options = {});

/// Tr(Psi T(t)) evaluated in the eigenbasis.
double trace_psi_T(const CorrelationSpectrum& spec, double t, double delta);

/// Per-lambda deterministic quantities; alpha(t) = xi1 * sigma_x2 + xi2 * sigma_n2.
struct DeterministicEquivalents {
    double lambda = 0.0;
    double t = 0.0;
    double delta = 0.0;
    double trace_psi_T = 0.0;
    double xi1 = 0.0;
    double xi2 = 0.0;
    std::size_t fixed_point_iters = 0;
};

DeterministicEquivalents coefficients(const CorrelationSpectrum& spec, std::size_t m,
                                      std::size_t k, double lambda,
                                      const FixedPointOptions& options = {});

double alpha(const DeterministicEquivalents& coeffs, double sigma_x2, double sigma_n2);

} // namespace rmtsnr
