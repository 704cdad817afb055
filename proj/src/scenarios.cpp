#include "rmtsnr/scenarios.hpp"

#include "rmtsnr/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rmtsnr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    return h;
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw ConfigError("gamma: shape must be positive");
    if (shape < 1.0) {
        double u;
        do u = uniform();
        while (u == 0.0);
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// ---------------------------------------------------------------------------
// Distribution
// ---------------------------------------------------------------------------

Distribution Distribution::gaussian(double variance) {
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw ConfigError("gaussian: variance must be finite and >= 0");
    return {Kind::kGaussian, variance, 1.0};
}

Distribution Distribution::uniform(double half_width) {
    if (!(half_width >= 0.0) || !std::isfinite(half_width))
        throw ConfigError("uniform: half-width must be finite and >= 0");
    return {Kind::kUniform, half_width, 1.0};
}

Distribution Distribution::student_t(double nu) {
    if (!(nu > 2.0)) throw ConfigError("student-t: degrees of freedom must exceed 2");
    return {Kind::kStudentT, nu, 1.0};
}

double Distribution::implied_variance() const {
    const double s2 = scale * scale;
    switch (kind) {
    case Kind::kGaussian:
        return parameter * s2;
    case Kind::kUniform:
        return parameter * parameter / 3.0 * s2;
    case Kind::kStudentT:
        return parameter / (parameter - 2.0) * s2;
    }
    return 0.0;
}

Distribution Distribution::with_variance(double variance) const {
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw ConfigError("with_variance: variance must be finite and >= 0");
    switch (kind) {
    case Kind::kGaussian:
        return gaussian(variance);
    case Kind::kUniform:
        return uniform(std::sqrt(3.0 * variance));
    case Kind::kStudentT: {
        Distribution d = student_t(parameter);
        d.scale = std::sqrt(variance / d.implied_variance());
        return d;
    }
    }
    return *this;
}

double Distribution::sample(Rng& rng) const {
    switch (kind) {
    case Kind::kGaussian:
        return std::sqrt(parameter) * scale * rng.normal();
    case Kind::kUniform:
        return scale * rng.uniform(-parameter, parameter);
    case Kind::kStudentT: {
        const double z = rng.normal();
        const double chi2 = 2.0 * rng.gamma(0.5 * parameter);
        return scale * z / std::sqrt(chi2 / parameter);
    }
    }
    return 0.0;
}

std::string Distribution::describe() const {
    std::ostringstream os;
    os.precision(12);
    switch (kind) {
    case Kind::kGaussian:
        os << "gaussian(var=" << parameter * scale * scale << ")";
        break;
    case Kind::kUniform:
        os << "uniform(-" << parameter * scale << "," << parameter * scale << ")";
        break;
    case Kind::kStudentT:
        os << "student_t(nu=" << parameter << ",scale=" << scale << ")";
        break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

std::string CorrelationSpec::describe() const {
    std::ostringstream os;
    os.precision(12);
    switch (kind) {
    case Kind::kDiagUniform:
        os << "diag_uniform";
        break;
    case Kind::kBessel:
        os << "bessel";
        break;
    case Kind::kExponential:
        os << "exponential(rho=" << rho_hat << ")";
        break;
    case Kind::kIdentity:
        os << "identity";
        break;
    }
    return os.str();
}

DenseMatrix correlation_matrix(const CorrelationSpec& spec) {
    const std::size_t m = spec.m;
    DenseMatrix psi(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = static_cast<double>(i > j ? i - j : j - i);
            switch (spec.kind) {
            case CorrelationSpec::Kind::kBessel:
                psi(i, j) = bessel_j0(std::numbers::pi * d * d);
                break;
            case CorrelationSpec::Kind::kExponential:
                psi(i, j) = i == j ? 1.0 : std::pow(spec.rho_hat, d * d);
                break;
            case CorrelationSpec::Kind::kIdentity:
                psi(i, j) = i == j ? 1.0 : 0.0;
                break;
            case CorrelationSpec::Kind::kDiagUniform:
                throw ConfigError("correlation_matrix: diag_uniform has no fixed matrix");
            }
        }
    }
    return psi;
}

CorrelationSpectrum build_correlation(const CorrelationSpec& spec) {
    if (spec.m == 0) throw ConfigError("build_correlation: M must be positive");
    switch (spec.kind) {
    case CorrelationSpec::Kind::kDiagUniform: {
        Rng rng(spec.seed);
        std::vector<double> q(spec.m);
        for (double& v : q) {
            const double psi = rng.uniform();
            v = psi * psi;
        }
        return CorrelationSpectrum::from_diagonal(std::move(q));
    }
    case CorrelationSpec::Kind::kIdentity:
        return CorrelationSpectrum::from_diagonal(std::vector<double>(spec.m, 1.0));
    case CorrelationSpec::Kind::kExponential:
        if (!(spec.rho_hat >= 0.0 && spec.rho_hat < 1.0))
            throw ConfigError("exponential correlation needs rho in [0, 1)");
        return CorrelationSpectrum::from_matrix(correlation_matrix(spec));
    case CorrelationSpec::Kind::kBessel:
        return CorrelationSpectrum::from_matrix(correlation_matrix(spec));
    }
    throw ConfigError("build_correlation: unknown kind");
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

GroundTruth sample_truth(const SignalSpec& signal, const NoiseSpec& noise, std::size_t m,
                         std::size_t k, Rng& rng) {
    GroundTruth t;
    t.x0.resize(k);
    t.n.resize(m);
    for (double& v : t.x0) v = signal.sample(rng);
    for (double& v : t.n) v = noise.sample(rng);
    t.sigma_x2 = signal.implied_variance();
    t.sigma_n2 = noise.implied_variance();
    t.snr_true_db = 10.0 * std::log10(t.sigma_x2 / t.sigma_n2);
    return t;
}

LinearModel synthesize(std::shared_ptr<const CorrelationSpectrum> spectrum,
                       const GroundTruth& truth, Rng& rng) {
    const std::size_t m = truth.n.size();
    const std::size_t k = truth.x0.size();
    if (!spectrum || spectrum->dim() != m)
        throw DimensionError("synthesize: correlation dimension does not match noise length");

    DenseMatrix wbar(m, k);
    for (double& v : wbar.entries()) v = rng.normal();
    std::vector<double> y = matvec(spectrum->apply_sqrt(wbar), truth.x0);
    for (std::size_t i = 0; i < m; ++i) y[i] += truth.n[i];
    return LinearModel(std::move(spectrum), std::move(wbar), std::move(y));
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

std::pair<SignalSpec, NoiseSpec> Experiment::at_snr(double snr) const {
    const double ratio = std::pow(10.0, snr / 10.0);
    switch (swept) {
    case SweptVariance::kSignal:
        return {signal.with_variance(noise.implied_variance() * ratio), noise};
    case SweptVariance::kNoise:
        return {signal, noise.with_variance(signal.implied_variance() / ratio)};
    case SweptVariance::kNone:
        break;
    }
    return {signal, noise};
}

std::vector<double> default_lambda_grid() { return {1e-3, 2e-3, 3e-3, 4e-3}; }

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw ConfigError("log_space: bad range");
    std::vector<double> out(n);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

std::vector<double> arithmetic_range(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw ConfigError("range: need step > 0 and hi >= lo");
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        const double v = lo + step * static_cast<double>(i);
        if (v > hi + 1e-9 * step) break;
        out.push_back(v);
        if (out.size() > 100'000) throw ConfigError("range: too many points");
    }
    return out;
}

namespace {

Experiment scenario_a() {
    Experiment e;
    e.name = "a";
    e.correlation = {CorrelationSpec::Kind::kDiagUniform, 80, 0.0, 0};
    e.signal = Distribution::gaussian(1.0);
    e.noise = Distribution::gaussian(0.1);
    e.dims = {{80, 40}};
    e.lambda_grids = {default_lambda_grid()};
    e.snr_db = arithmetic_range(-4.0, 20.0, 2.0);
    e.swept = SweptVariance::kSignal;
    return e;
}

Experiment scenario_b() {
    Experiment e = scenario_a();
    e.name = "b";
    e.correlation = {CorrelationSpec::Kind::kBessel, 80, 0.0, 0};
    e.noise = Distribution::uniform(3.0);
    return e;
}

Experiment scenario_c() {
    Experiment e = scenario_a();
    e.name = "c";
    e.correlation = {CorrelationSpec::Kind::kExponential, 80, 0.4, 0};
    e.signal = Distribution::uniform(5.0);
    e.noise = Distribution::gaussian(1.0);
    e.swept = SweptVariance::kNoise;
    return e;
}

Experiment scenario_d() {
    Experiment e = scenario_c();
    e.name = "d";
    e.signal = Distribution::student_t(5.0);
    return e;
}

} // namespace

Experiment scenario_catalog(const std::string& name) {
    if (name == "a") return scenario_a();
    if (name == "b") return scenario_b();
    if (name == "c") return scenario_c();
    if (name == "d") return scenario_d();
    if (name == "g") {
        Experiment e = scenario_a();
        e.name = "g";
        e.dims = {{10, 7}, {20, 10}, {40, 20}};
        return e;
    }
    if (name == "h") {
        Experiment e = scenario_a();
        e.name = "h";
        e.dims = {{31, 30}, {30, 35}};
        return e;
    }
    if (name == "i") {
        Experiment e = scenario_b();
        e.name = "i";
        e.lambda_grids = {default_lambda_grid(), {1e-2, 2e-2, 3e-2, 4e-2}, {0.5, 1.0, 5.0, 10.0}};
        return e;
    }
    if (name == "fig1") {
        Experiment e;
        e.name = "fig1";
        e.correlation = {CorrelationSpec::Kind::kDiagUniform, 300, 0.0, 0};
        e.signal = Distribution::gaussian(10.0);
        e.noise = Distribution::gaussian(1.0);
        e.dims = {{300, 100}};
        e.lambda_grids = {log_space(1e-3, 1e2, 20)};
        e.snr_db = {10.0};
        e.swept = SweptVariance::kNone;
        return e;
    }
    throw ConfigError("unknown scenario '" + name + "' (expected a, b, c, d, g, h, i or fig1)");
}

std::vector<std::string> scenario_names() { return {"a", "b", "c", "d", "g", "h", "i", "fig1"}; }

} // namespace rmtsnr
