#pragma once

#include "rmtsnr/estimator.hpp"
#include "rmtsnr/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rmtsnr {

struct RunConfig {
    std::string scenario = "a";
    /// Replaces the catalog lookup when set.
    std::optional<Experiment> inline_experiment;
    std::size_t trials = 1000;
    std::uint64_t master_seed = 1;
    /// Each non-empty override replaces the experiment's own setting.
    std::vector<double> lambda_grid;
    std::vector<double> snr_points_db;
    std::vector<Dims> dims;
    std::filesystem::path output_path;
    std::size_t parallelism = 0; ///< 0 selects the hardware concurrency
    bool dump_trials = false;
    /// (x0, n) draws per lambda in verify_theorem.
    std::size_t theorem_draws = 200;
    MlOptions ml;
};

/// Parses the JSON form of RunConfig. Unknown keys are rejected.
RunConfig config_from_json(const std::string& text);

/// Catalog (or inline) experiment with the config's overrides applied.
Experiment resolve_experiment(const RunConfig& config);

enum class Method { kProposed, kMl };
const char* method_name(Method m);

/// Aggregates over the non-degenerate trials of one (world, grid, SNR point, method).
/// Statistics are empty when they cannot be formed (no valid trial, or a variance
/// from fewer than two).
struct MetricsRow {
    std::string scenario;
    std::size_t grid = 0;
    Dims dims;
    double snr_true_db = 0.0;
    Method method = Method::kProposed;
    std::size_t trials_valid = 0;
    std::size_t trials_degenerate = 0;
    std::optional<double> mean_est_db;
    std::optional<double> bias_db;
    std::optional<double> nmse_db;
    std::optional<double> mean_norm_err;
    std::optional<double> norm_err_var;
};

struct TrialRecord {
    std::size_t world = 0;
    std::size_t grid = 0;
    std::size_t point = 0;
    std::size_t trial = 0;
    Method method = Method::kProposed;
    double snr_true_db = 0.0;
    SnrEstimate estimate;
    bool failed = false;
};

struct ScenarioResult {
    Experiment experiment;
    std::vector<MetricsRow> rows;
    std::vector<TrialRecord> trials; ///< filled only when dump_trials is set
    std::size_t failed_trials = 0;
    std::string first_failure;
};

/// Mean of the defined per-point normalized-error variances over the selected rows.
std::optional<double> average_norm_err_var(const std::vector<MetricsRow>& rows, Method method,
                                           const std::function<bool(const MetricsRow&)>& keep = {});

/// Per-trial statistics for one group; exposed so the dump can be re-aggregated.
MetricsRow summarize(std::span<const SnrEstimate> estimates, double snr_true_db,
                     std::size_t failed = 0);

/// Monte-Carlo sweep over every (dims, lambda grid, SNR point) of the experiment.
/// Each trial draws a fresh (wbar, x0, n) from its own seed-derived stream, so the
/// output does not depend on the thread count.
ScenarioResult run_scenario(const RunConfig& config);

/// Scenario-(a) settings at each configured (M, K); defaults to 10x7, 20x10, 40x20,
/// 31x30 and 30x35.
ScenarioResult dim_sweep(const RunConfig& config);

/// Scenario-(b) settings under the three catalog lambda grids.
ScenarioResult lambda_sensitivity(const RunConfig& config);

struct TheoremRow {
    double lambda = 0.0;
    double mc_mean_phi = 0.0;
    double alpha = 0.0;
    double rel_error = 0.0;
};

struct TheoremResult {
    Experiment experiment;
    std::vector<TheoremRow> rows;
    double sigma_x2 = 0.0;
    double sigma_n2 = 0.0;
};

/// Fixes one wbar and averages the ridge cost over theorem_draws (x0, n) draws per
/// lambda, against the deterministic prediction. Scenario "fig1" is the reference setup.
TheoremResult verify_theorem(const RunConfig& config);

void write_metrics_csv(std::ostream& out, const ScenarioResult& result, const RunConfig& config);
void write_trials_csv(std::ostream& out, const ScenarioResult& result, const RunConfig& config);
void write_theorem_csv(std::ostream& out, const TheoremResult& result, const RunConfig& config);

/// Runs the estimator on y, wbar and Psi read from CSV files.
SnrEstimate estimate_from_files(const std::filesystem::path& y_path,
                                const std::filesystem::path& wbar_path,
                                const std::filesystem::path& psi_path,
                                std::span<const double> lambdas);

std::string estimate_to_text(const SnrEstimate& e);
std::string estimate_to_json(const SnrEstimate& e);

/// Writes y.csv, wbar.csv and psi.csv for trial 0 of the first world and SNR point,
/// and returns the estimate computed in-process on that realization.
SnrEstimate dump_realization(const RunConfig& config, const std::filesystem::path& dir);

} // namespace rmtsnr
