#include "rmtsnr/errors.hpp"
#include "rmtsnr/rmt_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rmtsnr;

namespace {

double closed_form_delta(double t) { return (std::sqrt(1.0 + 4.0 * t) - 1.0) / (2.0 * t); }

CorrelationSpectrum identity(std::size_t m) {
    return CorrelationSpectrum::from_diagonal(std::vector<double>(m, 1.0));
}

// Bisection on g(d) = d - F(d), which is increasing in d.
double bisect_delta(const std::vector<double>& q, double k, double t) {
    auto g = [&](double d) {
        const double c = t / (1.0 + t * d);
        double s = 0.0;
        for (double qi : q) s += qi / (1.0 + c * qi);
        return d - s / k;
    };
    double lo = 1e-12;
    double hi = 0.0;
    for (double qi : q) hi += qi;
    hi /= k;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Spectrum, DiagonalAndDenseAgree) {
    const std::vector<double> q{0.25, 1.5, 0.0, 2.0};
    const auto diag = CorrelationSpectrum::from_diagonal(q);
    const auto dense = CorrelationSpectrum::from_matrix(DenseMatrix::diagonal(q));
    EXPECT_TRUE(diag.is_diagonal());
    EXPECT_FALSE(dense.is_diagonal());
    EXPECT_DOUBLE_EQ(diag.trace(), 3.75);
    EXPECT_DOUBLE_EQ(dense.trace(), 3.75);
    EXPECT_DOUBLE_EQ(dense.q_max(), 2.0);
    EXPECT_DOUBLE_EQ(dense.eigenvalues().front(), 2.0);
}

TEST(Spectrum, RejectsIndefinite) {
    EXPECT_THROW(CorrelationSpectrum::from_matrix(DenseMatrix{{1, 2}, {2, 1}}), DefinitenessError);
    EXPECT_THROW(CorrelationSpectrum::from_diagonal({1.0, -0.5}), DefinitenessError);
}

TEST(Spectrum, FloorsTinyNegativeEigenvalues) {
    // Rank-one matrix; rounding leaves eigenvalues of order 1e-16 either side of zero.
    const DenseMatrix psi{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    const auto s = CorrelationSpectrum::from_matrix(psi);
    for (double q : s.eigenvalues()) EXPECT_GE(q, 0.0);
    EXPECT_NEAR(s.q_max(), 3.0, 1e-12);
}

TEST(Spectrum, ApplySqrtSquaresBack) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> d;
    DenseMatrix b(5, 5);
    for (double& v : b.entries()) v = d(gen);
    const DenseMatrix psi = gram(b);
    const auto s = CorrelationSpectrum::from_matrix(psi);
    const DenseMatrix root = s.apply_sqrt(DenseMatrix::identity(5));
    const DenseMatrix back = multiply(root, root);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(back(i, j), psi(i, j), 1e-10 * psi.max_abs());
}

TEST(SolveDelta, ClosedFormIdentity) {
    for (std::size_t m : {40u, 100u}) {
        const auto s = identity(m);
        for (double t : {0.1, 1.0, 10.0}) {
            const auto r = solve_delta(s, m, t);
            EXPECT_NEAR(r.delta, closed_form_delta(t), 1e-10) << "M=" << m << " t=" << t;
        }
    }
    EXPECT_NEAR(solve_delta(identity(60), 60, 1.0).delta, 0.6180339887498949, 1e-10);
}

TEST(SolveDelta, SmallTLimit) {
    const auto s = CorrelationSpectrum::from_diagonal({0.5, 1.0, 2.0, 4.0});
    EXPECT_NEAR(solve_delta(s, 3, 1e-12).delta, 7.5 / 3.0, 1e-10);
}

TEST(SolveDelta, MatchesBisection) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> q(120);
    for (double& v : q) v = u(gen);
    const auto s = CorrelationSpectrum::from_diagonal(q);
    EXPECT_NEAR(solve_delta(s, 40, 7.0).delta, bisect_delta(q, 40.0, 7.0), 1e-10);
}

TEST(SolveDelta, DecreasesWithT) {
    const auto s = CorrelationSpectrum::from_diagonal({0.1, 0.4, 0.9, 1.6, 2.5});
    double prev = std::numeric_limits<double>::infinity();
    for (double t = 1e-3; t < 1e3; t *= 3.0) {
        const double d = solve_delta(s, 3, t).delta;
        EXPECT_LT(d, prev);
        EXPECT_GT(d, 0.0);
        prev = d;
    }
}

TEST(SolveDelta, PreconditionsAndCap) {
    const auto s = identity(10);
    EXPECT_THROW(solve_delta(s, 10, 0.0), ConfigError);
    EXPECT_THROW(solve_delta(s, 0, 1.0), ConfigError);
    EXPECT_THROW(solve_delta(CorrelationSpectrum::from_diagonal({0.0, 0.0}), 2, 1.0), ConfigError);
    try {
        solve_delta(s, 10, 1.0, {1e-12, 3});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.iterations(), 3u);
        EXPECT_GT(e.last_iterate(), 0.0);
    }
}

TEST(TracePsiT, Limits) {
    const auto s = CorrelationSpectrum::from_diagonal({0.5, 1.0, 2.5});
    EXPECT_DOUBLE_EQ(trace_psi_T(s, 0.0, 1.0), 4.0);
    const double d = closed_form_delta(1.0);
    EXPECT_NEAR(trace_psi_T(identity(50), 1.0, d), 50.0 * d, 1e-12);
}

TEST(TracePsiT, EqualsKDelta) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> mdist(2, 300);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t m = mdist(gen);
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 100)(gen);
        std::vector<double> q(m);
        for (double& v : q) v = 3.0 * u(gen) * u(gen);
        const auto s = CorrelationSpectrum::from_diagonal(q);
        const double t = std::pow(10.0, -3.0 + 6.0 * u(gen));
        const double delta = solve_delta(s, k, t).delta;
        EXPECT_NEAR(trace_psi_T(s, t, delta), static_cast<double>(k) * delta,
                    1e-9 * static_cast<double>(k) * delta);
    }
}

TEST(Coefficients, IdentityClosedForm) {
    const std::size_t k = 60;
    const auto c = coefficients(identity(k), k, k, static_cast<double>(k)); // t = 1
    const double d = closed_form_delta(1.0);
    EXPECT_NEAR(c.t, 1.0, 1e-15);
    EXPECT_NEAR(c.xi1, k * 0.3819660112501051, 1e-8);
    EXPECT_NEAR(c.xi2, 0.6180339887498949, 1e-10);
    EXPECT_NEAR(c.xi1, k * d / (1.0 + d), 1e-9);
}

TEST(Coefficients, LargeLambdaLimit) {
    const auto s = CorrelationSpectrum::from_diagonal({0.2, 0.7, 1.3, 0.4, 0.9, 1.1});
    const auto c = coefficients(s, 6, 3, 1e12);
    EXPECT_NEAR(c.xi1, s.trace(), 1e-9);
    EXPECT_NEAR(c.xi2, 2.0, 1e-9);
    EXPECT_NEAR(alpha(c, 2.0, 0.5), 2.0 * s.trace() + 1.0, 1e-8);
    EXPECT_EQ(alpha(c, 0.0, 0.0), 0.0);
}

TEST(Coefficients, Preconditions) {
    const auto s = identity(4);
    EXPECT_THROW(coefficients(s, 4, 2, 0.0), ConfigError);
    EXPECT_THROW(coefficients(s, 4, 2, -1.0), ConfigError);
    EXPECT_THROW(coefficients(s, 5, 2, 1.0), DimensionError);
}
