#include "rmtsnr/harness.hpp"

#include "rmtsnr/errors.hpp"
#include "rmtsnr/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace rmtsnr {

namespace {

// Stream tags for derive_seed; trial streams use (world, point, trial) directly.
constexpr std::uint64_t kPsiTag = 0x5053'4900'0000'0000ULL;
constexpr std::uint64_t kWbarTag = 0x5742'4152'0000'0000ULL;
constexpr std::uint64_t kDrawTag = 0x4452'4157'0000'0000ULL;

std::size_t resolve_threads(std::size_t requested, std::size_t tasks) {
    std::size_t n = requested;
    if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, tasks));
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Non-library exceptions
/// are rethrown on the calling thread after the join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = resolve_threads(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::shared_ptr<const CorrelationSpectrum> build_world(const Experiment& e, std::size_t world,
                                                       std::uint64_t master_seed) {
    CorrelationSpec spec = e.correlation;
    spec.m = e.dims.at(world).m;
    spec.seed = derive_seed(master_seed, {kPsiTag, world});
    return std::make_shared<const CorrelationSpectrum>(build_correlation(spec));
}

void validate_experiment(const Experiment& e) {
    if (e.dims.empty()) throw ConfigError("experiment has no dimensions");
    if (e.lambda_grids.empty()) throw ConfigError("experiment has no lambda grid");
    for (const auto& g : e.lambda_grids) validate_lambda_grid(g);
    if (e.snr_db.empty()) throw ConfigError("experiment has no SNR points");
    for (const auto& d : e.dims) {
        if (d.m == 0 || d.k == 0) throw ConfigError("dimensions must be positive");
        const double aspect = static_cast<double>(d.k) / static_cast<double>(d.m);
        if (aspect < LinearModel::kMinAspect || aspect > LinearModel::kMaxAspect)
            throw ConfigError("K/M outside [0.01, 100]");
    }
}

std::optional<double> defined(double v) {
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::string opt(const std::optional<double>& v) { return v ? io::format_value(*v) : "NA"; }

const char* status_name(SnrStatus s) {
    switch (s) {
    case SnrStatus::kFinite:
        return "finite";
    case SnrStatus::kInfinite:
        return "infinite";
    case SnrStatus::kZero:
        return "zero";
    case SnrStatus::kUndefined:
        return "undefined";
    }
    return "unknown";
}

const char* swept_name(SweptVariance s) {
    switch (s) {
    case SweptVariance::kSignal:
        return "signal";
    case SweptVariance::kNoise:
        return "noise";
    case SweptVariance::kNone:
        break;
    }
    return "none";
}

std::string join(std::span<const double> v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += io::format_value(v[i]);
    }
    return out;
}

void write_header(std::ostream& out, const char* kind, const Experiment& e,
                  const RunConfig& config) {
    out << "# rmtsnr " << kind << '\n';
    out << "# scenario: " << e.name << '\n';
    out << "# correlation: " << e.correlation.describe() << '\n';
    out << "# signal: " << e.signal.describe() << '\n';
    out << "# noise: " << e.noise.describe() << '\n';
    out << "# swept: " << swept_name(e.swept) << '\n';
    out << "# dims:";
    for (const auto& d : e.dims) out << ' ' << d.m << 'x' << d.k;
    out << '\n';
    for (std::size_t g = 0; g < e.lambda_grids.size(); ++g)
        out << "# lambda_grid_" << g << ": " << join(e.lambda_grids[g], ';') << '\n';
    out << "# snr_db: " << join(e.snr_db, ';') << '\n';
    out << "# trials: " << config.trials << '\n';
    out << "# master_seed: " << config.master_seed << '\n';
    out << "# ml_divisor: "
        << (config.ml.divisor == NoiseDivisor::kSampleCount ? "sample_count" : "residual_dof")
        << '\n';
}

} // namespace

const char* method_name(Method m) { return m == Method::kProposed ? "proposed" : "ml"; }

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

Experiment resolve_experiment(const RunConfig& config) {
    Experiment e = config.inline_experiment ? *config.inline_experiment
                                            : scenario_catalog(config.scenario);
    if (!config.lambda_grid.empty()) e.lambda_grids = {config.lambda_grid};
    if (!config.snr_points_db.empty()) e.snr_db = config.snr_points_db;
    if (!config.dims.empty()) e.dims = config.dims;
    validate_experiment(e);
    return e;
}

namespace {

using nlohmann::json;

Distribution distribution_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double p = j.at("parameter").get<double>();
    if (kind == "gaussian") return Distribution::gaussian(p);
    if (kind == "uniform") return Distribution::uniform(p);
    if (kind == "student_t") return Distribution::student_t(p);
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

std::vector<Dims> dims_from_json(const json& j) {
    std::vector<Dims> out;
    for (const auto& d : j) {
        if (!d.is_array() || d.size() != 2) throw ConfigError("dims entries must be [M, K]");
        out.push_back({d[0].get<std::size_t>(), d[1].get<std::size_t>()});
    }
    return out;
}

Experiment experiment_from_json(const json& j) {
    Experiment e;
    e.name = j.value("name", std::string("inline"));
    const json& c = j.at("correlation");
    const std::string kind = c.at("kind").get<std::string>();
    if (kind == "diag_uniform")
        e.correlation.kind = CorrelationSpec::Kind::kDiagUniform;
    else if (kind == "bessel")
        e.correlation.kind = CorrelationSpec::Kind::kBessel;
    else if (kind == "exponential")
        e.correlation.kind = CorrelationSpec::Kind::kExponential;
    else if (kind == "identity")
        e.correlation.kind = CorrelationSpec::Kind::kIdentity;
    else
        throw ConfigError("unknown correlation kind '" + kind + "'");
    e.correlation.rho_hat = c.value("rho_hat", 0.0);
    e.signal = distribution_from_json(j.at("signal"));
    e.noise = distribution_from_json(j.at("noise"));
    e.dims = dims_from_json(j.at("dims"));
    e.correlation.m = e.dims.empty() ? 0 : e.dims.front().m;
    e.lambda_grids = j.at("lambda_grids").get<std::vector<std::vector<double>>>();
    e.snr_db = j.at("snr_db").get<std::vector<double>>();
    const std::string swept = j.value("swept", std::string("none"));
    if (swept == "signal")
        e.swept = SweptVariance::kSignal;
    else if (swept == "noise")
        e.swept = SweptVariance::kNoise;
    else if (swept == "none")
        e.swept = SweptVariance::kNone;
    else
        throw ConfigError("swept must be signal, noise or none");
    return e;
}

} // namespace

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    static const std::vector<std::string> known{
        "scenario", "experiment", "trials", "master_seed", "lambdas", "snr_points_db", "dims",
        "output_path", "parallelism", "dump_trials", "theorem_draws", "ml_divisor"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("config: unknown key '" + key + "'");
    }

    RunConfig c;
    try {
        if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
        if (j.contains("experiment")) c.inline_experiment = experiment_from_json(j["experiment"]);
        if (j.contains("trials")) c.trials = j["trials"].get<std::size_t>();
        if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("lambdas")) c.lambda_grid = j["lambdas"].get<std::vector<double>>();
        if (j.contains("snr_points_db"))
            c.snr_points_db = j["snr_points_db"].get<std::vector<double>>();
        if (j.contains("dims")) c.dims = dims_from_json(j["dims"]);
        if (j.contains("output_path")) c.output_path = j["output_path"].get<std::string>();
        if (j.contains("parallelism")) {
            const auto& p = j["parallelism"];
            if (p.is_string()) {
                if (p.get<std::string>() != "auto")
                    throw ConfigError("config: parallelism must be a count or \"auto\"");
                c.parallelism = 0;
            } else {
                c.parallelism = p.get<std::size_t>();
            }
        }
        if (j.contains("dump_trials")) c.dump_trials = j["dump_trials"].get<bool>();
        if (j.contains("theorem_draws")) c.theorem_draws = j["theorem_draws"].get<std::size_t>();
        if (j.contains("ml_divisor")) {
            const std::string d = j["ml_divisor"].get<std::string>();
            if (d == "sample_count")
                c.ml.divisor = NoiseDivisor::kSampleCount;
            else if (d == "residual_dof")
                c.ml.divisor = NoiseDivisor::kResidualDof;
            else
                throw ConfigError("config: ml_divisor must be sample_count or residual_dof");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (c.trials == 0) throw ConfigError("config: trials must be >= 1");
    return c;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MetricsRow summarize(std::span<const SnrEstimate> estimates, double snr_true_db,
                     std::size_t failed) {
    MetricsRow row;
    row.snr_true_db = snr_true_db;
    row.trials_degenerate = failed;
    const double truth = std::pow(10.0, snr_true_db / 10.0);

    double sum_db = 0.0;
    double sum_err = 0.0;
    double sum_sq = 0.0;
    std::vector<double> errors;
    errors.reserve(estimates.size());
    for (const auto& e : estimates) {
        if (e.degenerate()) {
            ++row.trials_degenerate;
            continue;
        }
        const double err = (e.snr_linear - truth) / truth;
        if (!std::isfinite(err)) {
            ++row.trials_degenerate;
            continue;
        }
        ++row.trials_valid;
        sum_db += e.snr_db;
        sum_err += err;
        sum_sq += err * err;
        errors.push_back(err);
    }
    if (row.trials_valid == 0) return row;

    const double n = static_cast<double>(row.trials_valid);
    row.mean_est_db = sum_db / n;
    row.bias_db = *row.mean_est_db - snr_true_db;
    row.mean_norm_err = sum_err / n;
    if (sum_sq > 0.0) row.nmse_db = defined(10.0 * std::log10(sum_sq / n));
    if (row.trials_valid >= 2) {
        double ss = 0.0;
        for (double err : errors) ss += (err - *row.mean_norm_err) * (err - *row.mean_norm_err);
        row.norm_err_var = defined(ss / (n - 1.0));
    }
    return row;
}

std::optional<double> average_norm_err_var(const std::vector<MetricsRow>& rows, Method method,
                                           const std::function<bool(const MetricsRow&)>& keep) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows) {
        if (r.method != method || !r.norm_err_var) continue;
        if (keep && !keep(r)) continue;
        sum += *r.norm_err_var;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Monte-Carlo engine
// ---------------------------------------------------------------------------

namespace {

struct TrialOutcome {
    std::vector<SnrEstimate> proposed; // one per lambda grid
    SnrEstimate ml;
    bool failed = false;
    std::string error;
};

} // namespace

ScenarioResult run_scenario(const RunConfig& config) {
    if (config.trials == 0) throw ConfigError("trials must be >= 1");
    ScenarioResult result;
    result.experiment = resolve_experiment(config);
    const Experiment& e = result.experiment;

    const std::size_t worlds = e.dims.size();
    const std::size_t grids = e.lambda_grids.size();
    const std::size_t points = e.snr_db.size();
    const std::size_t trials = config.trials;

    std::vector<std::shared_ptr<const CorrelationSpectrum>> spectra;
    std::vector<std::vector<std::vector<DeterministicEquivalents>>> designs(worlds);
    for (std::size_t w = 0; w < worlds; ++w) {
        spectra.push_back(build_world(e, w, config.master_seed));
        for (const auto& grid : e.lambda_grids)
            designs[w].push_back(
                regression_design(*spectra[w], e.dims[w].m, e.dims[w].k, grid));
    }

    std::vector<std::pair<SignalSpec, NoiseSpec>> laws;
    for (double snr : e.snr_db) laws.push_back(e.at_snr(snr));

    std::vector<TrialOutcome> outcomes(worlds * points * trials);
    parallel_for(outcomes.size(), config.parallelism, [&](std::size_t index) {
        const std::size_t t = index % trials;
        const std::size_t p = (index / trials) % points;
        const std::size_t w = index / (trials * points);
        TrialOutcome& out = outcomes[index];
        try {
            Rng rng(derive_seed(config.master_seed, {w, p, t}));
            const auto& [signal, noise] = laws[p];
            const GroundTruth truth = sample_truth(signal, noise, e.dims[w].m, e.dims[w].k, rng);
            const LinearModel model = synthesize(spectra[w], truth, rng);
            for (std::size_t g = 0; g < grids; ++g)
                out.proposed.push_back(estimate_snr(model, designs[w][g]));
            out.ml = ml_baseline(model, truth.sigma_x2, config.ml);
        } catch (const Error& err) {
            out.failed = true;
            out.error = err.what();
        }
    });

    for (std::size_t w = 0; w < worlds; ++w) {
        for (std::size_t p = 0; p < points; ++p) {
            const double sx2 = laws[p].first.implied_variance();
            const double sn2 = laws[p].second.implied_variance();
            const double snr_true_db = 10.0 * std::log10(sx2 / sn2);
            const std::size_t base = (w * points + p) * trials;

            std::size_t failed = 0;
            std::vector<std::vector<SnrEstimate>> proposed(grids);
            std::vector<SnrEstimate> ml;
            for (std::size_t t = 0; t < trials; ++t) {
                const TrialOutcome& o = outcomes[base + t];
                if (o.failed) {
                    if (failed++ == 0 && result.failed_trials == 0) result.first_failure = o.error;
                    ++result.failed_trials;
                    if (config.dump_trials) {
                        TrialRecord rec{w, 0, p, t, Method::kProposed, snr_true_db, {}, true};
                        result.trials.push_back(rec);
                    }
                    continue;
                }
                for (std::size_t g = 0; g < grids; ++g) proposed[g].push_back(o.proposed[g]);
                ml.push_back(o.ml);
                if (config.dump_trials) {
                    for (std::size_t g = 0; g < grids; ++g)
                        result.trials.push_back(
                            {w, g, p, t, Method::kProposed, snr_true_db, o.proposed[g], false});
                    result.trials.push_back({w, 0, p, t, Method::kMl, snr_true_db, o.ml, false});
                }
            }

            auto label = [&](MetricsRow row, std::size_t g, Method m) {
                row.scenario = e.name;
                row.grid = g;
                row.dims = e.dims[w];
                row.method = m;
                result.rows.push_back(std::move(row));
            };
            for (std::size_t g = 0; g < grids; ++g)
                label(summarize(proposed[g], snr_true_db, failed), g, Method::kProposed);
            // The baseline ignores the lambda grid; it is reported once, under grid 0.
            label(summarize(ml, snr_true_db, failed), 0, Method::kMl);
        }
    }
    return result;
}

ScenarioResult dim_sweep(const RunConfig& config) {
    RunConfig c = config;
    c.scenario = "a";
    c.inline_experiment.reset();
    if (c.dims.empty()) c.dims = {{10, 7}, {20, 10}, {40, 20}, {31, 30}, {30, 35}};
    ScenarioResult r = run_scenario(c);
    r.experiment.name = "dim-sweep";
    for (auto& row : r.rows) row.scenario = "dim-sweep";
    return r;
}

ScenarioResult lambda_sensitivity(const RunConfig& config) {
    RunConfig c = config;
    c.scenario = "i";
    c.inline_experiment.reset();
    c.lambda_grid.clear();
    return run_scenario(c);
}

// ---------------------------------------------------------------------------
// Theorem check
// ---------------------------------------------------------------------------

TheoremResult verify_theorem(const RunConfig& config) {
    if (config.theorem_draws == 0) throw ConfigError("theorem_draws must be >= 1");
    RunConfig c = config;
    if (!c.inline_experiment && c.scenario.empty()) c.scenario = "fig1";

    TheoremResult result;
    result.experiment = resolve_experiment(c);
    const Experiment& e = result.experiment;
    const auto [signal, noise] =
        e.swept == SweptVariance::kNone ? std::pair{e.signal, e.noise} : e.at_snr(e.snr_db.front());
    result.sigma_x2 = signal.implied_variance();
    result.sigma_n2 = noise.implied_variance();

    const std::size_t m = e.dims.front().m;
    const std::size_t k = e.dims.front().k;
    const auto spectrum = build_world(e, 0, config.master_seed);

    Rng wbar_rng(derive_seed(config.master_seed, {kWbarTag}));
    DenseMatrix wbar(m, k);
    for (double& v : wbar.entries()) v = wbar_rng.normal();
    const DenseMatrix w = spectrum->apply_sqrt(wbar);
    const DenseMatrix g = gram(w);

    const std::size_t draws = config.theorem_draws;
    std::vector<std::vector<double>> ys(draws);
    std::vector<std::vector<double>> wtys(draws);
    parallel_for(draws, config.parallelism, [&](std::size_t d) {
        Rng rng(derive_seed(config.master_seed, {kDrawTag, d}));
        std::vector<double> x0(k);
        for (double& v : x0) v = signal.sample(rng);
        std::vector<double> y = matvec(w, x0);
        for (double& v : y) v += noise.sample(rng);
        wtys[d] = matvec_transposed(w, y);
        ys[d] = std::move(y);
    });

    const auto& lambdas = e.lambda_grids.front();
    result.rows.resize(lambdas.size());
    parallel_for(lambdas.size(), config.parallelism, [&](std::size_t i) {
        const double lambda = lambdas[i];
        DenseMatrix shifted = g;
        for (std::size_t j = 0; j < k; ++j) shifted(j, j) += lambda;
        const Cholesky chol(shifted);

        double sum = 0.0;
        for (std::size_t d = 0; d < draws; ++d) {
            const std::vector<double> x = chol.solve(wtys[d]);
            std::vector<double> r = matvec(w, x);
            for (std::size_t j = 0; j < m; ++j) r[j] = ys[d][j] - r[j];
            sum += (squared_norm(r) + lambda * squared_norm(x)) / static_cast<double>(k);
        }

        TheoremRow& row = result.rows[i];
        row.lambda = lambda;
        row.mc_mean_phi = sum / static_cast<double>(draws);
        row.alpha = alpha(coefficients(*spectrum, m, k, lambda), result.sigma_x2, result.sigma_n2);
        if (row.alpha != 0.0)
            row.rel_error = std::abs(row.mc_mean_phi - row.alpha) / std::abs(row.alpha);
        else
            row.rel_error = row.mc_mean_phi == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    });
    return result;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_metrics_csv(std::ostream& out, const ScenarioResult& result, const RunConfig& config) {
    write_header(out, "metrics", result.experiment, config);
    out << "scenario,grid,M,K,snr_true_db,method,trials_valid,trials_degenerate,mean_est_db,"
           "bias_db,nmse_db,mean_norm_err,norm_err_var\n";
    for (const auto& r : result.rows) {
        out << r.scenario << ',' << r.grid << ',' << r.dims.m << ',' << r.dims.k << ','
            << io::format_value(r.snr_true_db) << ',' << method_name(r.method) << ','
            << r.trials_valid << ',' << r.trials_degenerate << ',' << opt(r.mean_est_db) << ','
            << opt(r.bias_db) << ',' << opt(r.nmse_db) << ',' << opt(r.mean_norm_err) << ','
            << opt(r.norm_err_var) << '\n';
    }
}

void write_trials_csv(std::ostream& out, const ScenarioResult& result, const RunConfig& config) {
    write_header(out, "trials", result.experiment, config);
    out << "world,grid,M,K,point,trial,snr_true_db,method,status,sigma_x2_hat,sigma_n2_hat,"
           "snr_linear,snr_db\n";
    for (const auto& t : result.trials) {
        const Dims& d = result.experiment.dims[t.world];
        out << t.world << ',' << t.grid << ',' << d.m << ',' << d.k << ',' << t.point << ','
            << t.trial << ',' << io::format_value(t.snr_true_db) << ',' << method_name(t.method)
            << ',';
        if (t.failed) {
            out << "failed,NA,NA,NA,NA\n";
            continue;
        }
        out << status_name(t.estimate.status) << ',' << io::format_value(t.estimate.sigma_x2_hat)
            << ',' << io::format_value(t.estimate.sigma_n2_hat) << ','
            << io::format_value(t.estimate.snr_linear) << ',' << io::format_value(t.estimate.snr_db)
            << '\n';
    }
}

void write_theorem_csv(std::ostream& out, const TheoremResult& result, const RunConfig& config) {
    write_header(out, "theorem", result.experiment, config);
    out << "# draws_per_lambda: " << config.theorem_draws << '\n';
    out << "# sigma_x2: " << io::format_value(result.sigma_x2) << '\n';
    out << "# sigma_n2: " << io::format_value(result.sigma_n2) << '\n';
    out << "lambda,mc_mean_phi,alpha,rel_error\n";
    for (const auto& r : result.rows) {
        out << io::format_value(r.lambda) << ',' << io::format_value(r.mc_mean_phi) << ','
            << io::format_value(r.alpha) << ',' << io::format_value(r.rel_error) << '\n';
    }
}

// ---------------------------------------------------------------------------
// File-based estimation
// ---------------------------------------------------------------------------

SnrEstimate estimate_from_files(const std::filesystem::path& y_path,
                                const std::filesystem::path& wbar_path,
                                const std::filesystem::path& psi_path,
                                std::span<const double> lambdas) {
    std::vector<double> y = io::read_vector(y_path);
    DenseMatrix wbar = io::read_matrix(wbar_path);
    auto spectrum = std::make_shared<const CorrelationSpectrum>(io::read_correlation(psi_path));
    if (y.size() != wbar.rows()) {
        throw DimensionError("dimension mismatch: y has " + std::to_string(y.size()) +
                             " entries but W has " + std::to_string(wbar.rows()) + " rows");
    }
    if (spectrum->dim() != wbar.rows()) {
        throw DimensionError("dimension mismatch: Psi is " + std::to_string(spectrum->dim()) +
                             "x" + std::to_string(spectrum->dim()) + " but W has " +
                             std::to_string(wbar.rows()) + " rows");
    }
    const LinearModel model(std::move(spectrum), std::move(wbar), std::move(y));
    return estimate_snr(model, lambdas);
}

std::string estimate_to_text(const SnrEstimate& e) {
    std::ostringstream os;
    os << "sigma_x2_hat: " << io::format_value(e.sigma_x2_hat) << '\n';
    os << "sigma_n2_hat: " << io::format_value(e.sigma_n2_hat) << '\n';
    os << "snr_linear: " << io::format_value(e.snr_linear) << '\n';
    os << "snr_db: " << io::format_value(e.snr_db) << '\n';
    os << "status: " << status_name(e.status) << '\n';
    os << "fit_residual_norm: " << io::format_value(e.diagnostics.fit_residual_norm) << '\n';
    os << "fixed_point_iters:";
    for (std::size_t it : e.diagnostics.fixed_point_iters) os << ' ' << it;
    os << '\n';
    return os.str();
}

std::string estimate_to_json(const SnrEstimate& e) {
    auto number = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json j;
    j["sigma_x2_hat"] = number(e.sigma_x2_hat);
    j["sigma_n2_hat"] = number(e.sigma_n2_hat);
    j["snr_linear"] = number(e.snr_linear);
    j["snr_db"] = number(e.snr_db);
    j["status"] = status_name(e.status);
    j["fit_residual_norm"] = number(e.diagnostics.fit_residual_norm);
    j["fixed_point_iters"] = e.diagnostics.fixed_point_iters;
    return j.dump();
}

SnrEstimate dump_realization(const RunConfig& config, const std::filesystem::path& dir) {
    const Experiment e = resolve_experiment(config);
    const auto spectrum = build_world(e, 0, config.master_seed);
    const auto [signal, noise] = e.at_snr(e.snr_db.front());
    Rng rng(derive_seed(config.master_seed, {0, 0, 0}));
    const GroundTruth truth = sample_truth(signal, noise, e.dims[0].m, e.dims[0].k, rng);
    const LinearModel model = synthesize(spectrum, truth, rng);

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    io::write_vector(dir / "y.csv", model.y());
    io::write_matrix(dir / "wbar.csv", model.wbar());
    io::write_correlation(dir / "psi.csv", model.spectrum());
    return estimate_snr(model, e.lambda_grids.front());
}

} // namespace rmtsnr
