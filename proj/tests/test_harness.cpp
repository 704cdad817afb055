#include "rmtsnr/errors.hpp"
#include "rmtsnr/harness.hpp"
#include "rmtsnr/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rmtsnr;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("rmtsnr_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                 "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string metrics_csv(const RunConfig& c) {
    std::ostringstream os;
    write_metrics_csv(os, run_scenario(c), c);
    return os.str();
}

} // namespace

TEST(Io, ParseMatrixWithCommentsAndErrors) {
    std::istringstream in("# header\n1, 2\n\n3,4\n");
    const DenseMatrix m = io::parse_matrix(in);
    EXPECT_EQ(m, (DenseMatrix{{1, 2}, {3, 4}}));

    std::istringstream bad("1,2\n3,x\n");
    try {
        io::parse_matrix(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 3u);
    }
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(io::parse_matrix(ragged), ParseError);
}

TEST(Io, CorrelationForms) {
    std::istringstream diag("diag: 0.5, 1, 2\n");
    const auto d = io::parse_correlation(diag);
    EXPECT_TRUE(d.is_diagonal());
    EXPECT_EQ(d.dim(), 3u);
    std::istringstream dense("2,1\n1,2\n");
    const auto s = io::parse_correlation(dense);
    EXPECT_FALSE(s.is_diagonal());
    EXPECT_NEAR(s.q_max(), 3.0, 1e-14);
    std::istringstream rect("1,0,0\n0,1,0\n");
    EXPECT_THROW(io::parse_correlation(rect), DimensionError);
}

TEST(Io, FormatValue) {
    EXPECT_EQ(io::format_value(0.1), "0.1");
    EXPECT_EQ(io::format_value(INFINITY), "inf");
    EXPECT_EQ(io::format_value(-INFINITY), "-inf");
    EXPECT_EQ(std::stod(io::format_exact(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Io, MissingFileIsIoError) {
    EXPECT_THROW(io::read_matrix("/nonexistent/rmtsnr/w.csv"), IoError);
}

TEST(Config, JsonRoundTrip) {
    const RunConfig c = config_from_json(R"({"scenario": "b", "trials": 7, "master_seed": 9,
        "lambdas": [0.01, 0.02], "snr_points_db": [0, 10], "parallelism": "auto",
        "dims": [[40, 20]], "ml_divisor": "residual_dof"})");
    EXPECT_EQ(c.scenario, "b");
    EXPECT_EQ(c.trials, 7u);
    EXPECT_EQ(c.master_seed, 9u);
    EXPECT_EQ(c.parallelism, 0u);
    EXPECT_EQ(c.ml.divisor, NoiseDivisor::kResidualDof);
    const Experiment e = resolve_experiment(c);
    EXPECT_EQ(e.lambda_grids, (std::vector<std::vector<double>>{{0.01, 0.02}}));
    EXPECT_EQ(e.dims, (std::vector<Dims>{{40, 20}}));
    EXPECT_EQ(e.snr_db, (std::vector<double>{0, 10}));

    EXPECT_THROW(config_from_json(R"({"trails": 3})"), ConfigError);
    EXPECT_THROW(config_from_json(R"({"trials": 0})"), ConfigError);
    EXPECT_THROW(config_from_json("{"), ParseError);
    EXPECT_THROW(config_from_json(R"({"trials": "many"})"), ParseError);
}

TEST(Config, InlineExperiment) {
    const RunConfig c = config_from_json(R"({"experiment": {
        "correlation": {"kind": "exponential", "rho_hat": 0.2},
        "signal": {"kind": "gaussian", "parameter": 1.0},
        "noise": {"kind": "uniform", "parameter": 1.0},
        "dims": [[30, 10]], "lambda_grids": [[0.001, 0.002]], "snr_db": [5],
        "swept": "signal"}, "trials": 3})");
    ASSERT_TRUE(c.inline_experiment);
    const auto r = run_scenario(c);
    EXPECT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].dims, (Dims{30, 10}));
}

TEST(Summarize, Definitions) {
    std::vector<SnrEstimate> v{make_estimate(2.0, 0.1), make_estimate(1.0, 0.1),
                               make_estimate(1.0, 0.0)};
    const MetricsRow r = summarize(v, 10.0, 2);
    EXPECT_EQ(r.trials_valid, 2u);
    EXPECT_EQ(r.trials_degenerate, 3u);
    EXPECT_NEAR(*r.mean_est_db, 0.5 * (10.0 * std::log10(20.0) + 10.0), 1e-12);
    EXPECT_NEAR(*r.mean_norm_err, 0.5, 1e-12);
    EXPECT_NEAR(*r.norm_err_var, 0.5, 1e-12);
    EXPECT_NEAR(*r.nmse_db, 10.0 * std::log10(0.5), 1e-12);

    const MetricsRow one = summarize(std::span(v).first(1), 10.0);
    EXPECT_TRUE(one.mean_est_db.has_value());
    EXPECT_FALSE(one.norm_err_var.has_value());
    const MetricsRow none = summarize({}, 10.0, 4);
    EXPECT_FALSE(none.mean_est_db.has_value());
    EXPECT_EQ(none.trials_degenerate, 4u);
}

TEST(RunScenario, SingleTrialFlagsVariance) {
    RunConfig c;
    c.trials = 1;
    c.snr_points_db = {0.0, 10.0};
    const auto r = run_scenario(c);
    ASSERT_EQ(r.rows.size(), 4u);
    for (const auto& row : r.rows) EXPECT_FALSE(row.norm_err_var.has_value());
    const std::string csv = metrics_csv(c);
    EXPECT_NE(csv.find(",NA\n"), std::string::npos);
    EXPECT_EQ(csv.find("nan"), std::string::npos);
}

TEST(RunScenario, ThreadCountDoesNotChangeBytes) {
    RunConfig c;
    c.trials = 200;
    c.parallelism = 1;
    const std::string serial = metrics_csv(c);
    c.parallelism = 4;
    EXPECT_EQ(serial, metrics_csv(c));
    c.parallelism = 0;
    EXPECT_EQ(serial, metrics_csv(c));
}

TEST(RunScenario, SeedMatters) {
    RunConfig c;
    c.trials = 20;
    c.snr_points_db = {10.0};
    const std::string a = metrics_csv(c);
    c.master_seed = 2;
    EXPECT_NE(a, metrics_csv(c));
}

TEST(RunScenario, TrialDumpReproducesMeans) {
    RunConfig c;
    c.trials = 30;
    c.snr_points_db = {4.0};
    c.dump_trials = true;
    const auto r = run_scenario(c);
    std::ostringstream os;
    write_trials_csv(os, r, c);

    std::istringstream in(os.str());
    std::string line;
    double sum = 0.0;
    int count = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("world", 0) == 0) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        ASSERT_EQ(f.size(), 13u);
        if (f[7] == "proposed" && f[8] == "finite") {
            sum += std::stod(f[12]);
            ++count;
        }
    }
    const MetricsRow& row = r.rows.front();
    ASSERT_EQ(row.method, Method::kProposed);
    EXPECT_EQ(count, static_cast<int>(row.trials_valid));
    EXPECT_NEAR(sum / count, *row.mean_est_db, 1e-9);
}

TEST(RunScenario, LambdaSensitivityHasThreeGrids) {
    RunConfig c;
    c.trials = 5;
    c.snr_points_db = {10.0};
    const auto r = lambda_sensitivity(c);
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows[2].grid, 2u);
    EXPECT_EQ(r.rows[3].method, Method::kMl);
}

TEST(DimSweep, DefaultDims) {
    RunConfig c;
    c.trials = 4;
    c.snr_points_db = {10.0};
    const auto r = dim_sweep(c);
    ASSERT_EQ(r.rows.size(), 10u);
    EXPECT_EQ(r.rows[8].dims, (Dims{30, 35}));
    EXPECT_EQ(r.rows[0].scenario, "dim-sweep");
}

TEST(VerifyTheorem, ZeroVariances) {
    RunConfig c;
    Experiment e = scenario_catalog("fig1");
    e.dims = {{60, 20}};
    e.signal = Distribution::gaussian(0.0);
    e.noise = Distribution::gaussian(0.0);
    e.lambda_grids = {{0.01, 1.0}};
    c.inline_experiment = e;
    c.theorem_draws = 5;
    const auto r = verify_theorem(c);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.mc_mean_phi, 0.0);
        EXPECT_EQ(row.alpha, 0.0);
        EXPECT_EQ(row.rel_error, 0.0);
    }
}

TEST(VerifyTheorem, IdentityClosedForm) {
    RunConfig c;
    Experiment e = scenario_catalog("fig1");
    e.correlation.kind = CorrelationSpec::Kind::kIdentity;
    e.dims = {{60, 60}};
    e.signal = Distribution::gaussian(2.0);
    e.noise = Distribution::gaussian(0.5);
    e.lambda_grids = {{60.0, 600.0}}; // t = 1 and t = 0.1
    c.inline_experiment = e;
    c.theorem_draws = 2;
    const auto r = verify_theorem(c);
    for (const auto& row : r.rows) {
        const double t = 60.0 / row.lambda;
        const double d = (std::sqrt(1.0 + 4.0 * t) - 1.0) / (2.0 * t);
        const double xi1 = 60.0 * d / (1.0 + t * d);
        const double xi2 = 1.0 - t * d / (1.0 + t * d);
        EXPECT_NEAR(row.alpha, xi1 * 2.0 + xi2 * 0.5, 1e-8);
    }
}

TEST(EstimateFromFiles, DumpRoundTrip) {
    TempDir dir;
    RunConfig c;
    c.snr_points_db = {6.0};
    const SnrEstimate in_process = dump_realization(c, dir.path());
    const auto grid = default_lambda_grid();
    const SnrEstimate from_files = estimate_from_files(dir.path() / "y.csv", dir.path() / "wbar.csv",
                                                       dir.path() / "psi.csv", grid);
    EXPECT_EQ(in_process.sigma_x2_hat, from_files.sigma_x2_hat);
    EXPECT_EQ(in_process.sigma_n2_hat, from_files.sigma_n2_hat);
    EXPECT_EQ(in_process.snr_db, from_files.snr_db);
}

TEST(EstimateFromFiles, DenseBesselRoundTrip) {
    TempDir dir;
    RunConfig c;
    c.scenario = "b";
    c.snr_points_db = {10.0};
    const SnrEstimate in_process = dump_realization(c, dir.path());
    const SnrEstimate from_files =
        estimate_from_files(dir.path() / "y.csv", dir.path() / "wbar.csv", dir.path() / "psi.csv",
                            default_lambda_grid());
    EXPECT_EQ(in_process.snr_db, from_files.snr_db);
}

TEST(EstimateFromFiles, DiagonalMatchesDense) {
    TempDir dir;
    RunConfig c;
    c.snr_points_db = {10.0};
    dump_realization(c, dir.path());
    const auto spectrum = io::read_correlation(dir.path() / "psi.csv");
    ASSERT_TRUE(spectrum.is_diagonal());
    io::write_matrix(dir.path() / "psi_dense.csv", spectrum.matrix());

    const auto grid = default_lambda_grid();
    const auto diag = estimate_from_files(dir.path() / "y.csv", dir.path() / "wbar.csv",
                                          dir.path() / "psi.csv", grid);
    const auto dense = estimate_from_files(dir.path() / "y.csv", dir.path() / "wbar.csv",
                                           dir.path() / "psi_dense.csv", grid);
    EXPECT_NEAR(diag.sigma_x2_hat, dense.sigma_x2_hat, 1e-10 * diag.sigma_x2_hat);
    EXPECT_NEAR(diag.sigma_n2_hat, dense.sigma_n2_hat, 1e-10 * diag.sigma_n2_hat);
}

TEST(EstimateFromFiles, DimensionMismatch) {
    TempDir dir;
    write(dir.path() / "y.csv", "1\n2\n3\n");
    write(dir.path() / "w.csv", "1,0\n0,1\n1,1\n1,2\n");
    write(dir.path() / "psi.csv", "diag: 1,1,1,1\n");
    try {
        estimate_from_files(dir.path() / "y.csv", dir.path() / "w.csv", dir.path() / "psi.csv",
                            default_lambda_grid());
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
    }
}

TEST(EstimateOutput, TextAndJson) {
    SnrEstimate e = make_estimate(1.0, 0.0);
    const std::string json = estimate_to_json(e);
    EXPECT_NE(json.find("\"snr_db\":null"), std::string::npos);
    EXPECT_NE(json.find("\"status\":\"infinite\""), std::string::npos);
    EXPECT_NE(estimate_to_text(make_estimate(1.0, 0.1)).find("snr_db: 10"), std::string::npos);
}
