// Monte-Carlo checks of the dimension sweep at moderate trial counts.

#include "rmtsnr/harness.hpp"

#include <gtest/gtest.h>

using namespace rmtsnr;

namespace {

const MetricsRow& row_for(const ScenarioResult& r, Dims d, Method m) {
    for (const auto& row : r.rows)
        if (row.dims == d && row.method == m) return row;
    throw std::runtime_error("row not found");
}

class DimensionSweep : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        RunConfig c;
        c.trials = 500;
        c.master_seed = 77;
        c.dims = {{30, 35}};
        result_ = new ScenarioResult(dim_sweep(c));
    }
    static void TearDownTestSuite() {
        delete result_;
        result_ = nullptr;
    }
    static ScenarioResult* result_;
};

ScenarioResult* DimensionSweep::result_ = nullptr;

double aggregate(const ScenarioResult& r, Dims d, Method m) {
    return average_norm_err_var(r.rows, m, [&](const MetricsRow& row) { return row.dims == d; })
        .value();
}

} // namespace

// At 10x7 both error distributions are heavy tailed and a single correlation draw
// can flip the ordering, so the comparison pools five independent worlds.
TEST(SmallSystem, StillBeatsMl) {
    double proposed = 0.0;
    double ml = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RunConfig c;
        c.trials = 1000;
        c.master_seed = seed;
        c.dims = {{10, 7}};
        const ScenarioResult r = dim_sweep(c);
        proposed += average_norm_err_var(r.rows, Method::kProposed).value();
        ml += average_norm_err_var(r.rows, Method::kMl).value();
    }
    EXPECT_LT(proposed, ml);
}

// The 40x20 to 80x40 ratio swings between roughly 2.7 and 4.4 from one world to the
// next, so it is also pooled.
TEST(HalfSize, KeepsAccuracy) {
    double half = 0.0;
    double full = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RunConfig c;
        c.trials = 1000;
        c.master_seed = seed;
        c.dims = {{40, 20}, {80, 40}};
        const ScenarioResult r = dim_sweep(c);
        half += aggregate(r, {40, 20}, Method::kProposed);
        full += aggregate(r, {80, 40}, Method::kProposed);
    }
    EXPECT_LT(half, 3.0 * full);
}

TEST_F(DimensionSweep, WideSystemMlBreaksDown) {
    const Dims wide{30, 35};
    for (const auto& row : result_->rows) {
        if (!(row.dims == wide) || row.method != Method::kProposed) continue;
        EXPECT_TRUE(row.mean_est_db.has_value()) << row.snr_true_db;
        EXPECT_GT(row.trials_valid, row.trials_degenerate) << row.snr_true_db;
    }
    const MetricsRow& ml = row_for(*result_, wide, Method::kMl);
    EXPECT_GT(*ml.bias_db, 10.0);
    EXPECT_GT(aggregate(*result_, wide, Method::kMl),
              100.0 * aggregate(*result_, wide, Method::kProposed));
}
