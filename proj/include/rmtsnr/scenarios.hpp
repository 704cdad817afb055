#pragma once

#include "rmtsnr/estimator.hpp"
#include "rmtsnr/rmt_core.hpp"

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace rmtsnr {

/// SplitMix64 finalizer folded over a path of integers. Used to give every
/// (world, SNR point, trial) its own independent stream from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seeded stream. mt19937_64 output is fixed by the standard; the transforms below
/// are implemented here so draws are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal, Marsaglia polar method.
    double normal();
    /// Gamma(shape, 1), Marsaglia-Tsang.
    double gamma(double shape);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Zero-mean i.i.d. entry law for x0 or n.
struct Distribution {
    enum class Kind { kGaussian, kUniform, kStudentT };

    Kind kind = Kind::kGaussian;
    /// Gaussian: variance. Uniform: half-width a of [-a, a]. Student-t: degrees of freedom.
    double parameter = 1.0;
    /// Multiplies every draw; only used to rescale Student-t.
    double scale = 1.0;

    static Distribution gaussian(double variance);
    static Distribution uniform(double half_width);
    static Distribution student_t(double nu);

    double implied_variance() const;
    /// Same law family rescaled to the requested variance.
    Distribution with_variance(double variance) const;
    double sample(Rng& rng) const;
    std::string describe() const;
};

using SignalSpec = Distribution;
using NoiseSpec = Distribution;

struct CorrelationSpec {
    enum class Kind { kDiagUniform, kBessel, kExponential, kIdentity };

    Kind kind = Kind::kIdentity;
    std::size_t m = 0;
    double rho_hat = 0.0;     ///< exponential model only, in [0, 1)
    std::uint64_t seed = 0;   ///< diag-uniform only

    std::string describe() const;
};

/// Dense Psi entries for the Bessel and exponential models.
DenseMatrix correlation_matrix(const CorrelationSpec& spec);

/// Diag-uniform: Psi^{1/2} = diag(psi), psi_i ~ U(0, 1). Bessel: J0(pi |i-j|^2).
/// Exponential: rho^{|i-j|^2}, with 0^0 = 1. Identity: Psi = I.
CorrelationSpectrum build_correlation(const CorrelationSpec& spec);

struct GroundTruth {
    std::vector<double> x0;
    std::vector<double> n;
    double sigma_x2 = 0.0;
    double sigma_n2 = 0.0;
    double snr_true_db = 0.0;
};

GroundTruth sample_truth(const SignalSpec& signal, const NoiseSpec& noise, std::size_t m,
                         std::size_t k, Rng& rng);

/// Draws wbar ~ N(0, 1) and forms y = Psi^{1/2} wbar x0 + n.
LinearModel synthesize(std::shared_ptr<const CorrelationSpectrum> spectrum,
                       const GroundTruth& truth, Rng& rng);

struct Dims {
    std::size_t m = 0;
    std::size_t k = 0;
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Which variance moves when an SNR sweep point is applied.
enum class SweptVariance { kNone, kSignal, kNoise };

/// One experimental world, or a family of them (several dims or lambda grids).
struct Experiment {
    std::string name;
    CorrelationSpec correlation;
    SignalSpec signal;
    NoiseSpec noise;
    std::vector<Dims> dims;
    std::vector<std::vector<double>> lambda_grids;
    std::vector<double> snr_db;
    SweptVariance swept = SweptVariance::kNone;

    /// Signal/noise laws at a target SNR according to `swept`.
    std::pair<SignalSpec, NoiseSpec> at_snr(double snr_db) const;
};

std::vector<double> default_lambda_grid();
/// n points log-spaced over [lo, hi].
std::vector<double> log_space(double lo, double hi, std::size_t n);
/// lo, lo + step, ..., up to hi inclusive.
std::vector<double> arithmetic_range(double lo, double hi, double step);

/// Names: a, b, c, d, g, h, i, fig1. Throws ConfigError for anything else.
Experiment scenario_catalog(const std::string& name);
std::vector<std::string> scenario_names();

} // namespace rmtsnr
