#include "rmtsnr/numerics.hpp"

#include "rmtsnr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace rmtsnr {

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("DenseMatrix: " + std::to_string(data_.size()) +
                             " entries do not fill " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double DenseMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double DenseMatrix::frobenius_norm() const noexcept { return std::sqrt(squared_norm(data_)); }

double DenseMatrix::trace() const {
    if (!square()) throw DimensionError("trace: matrix is not square");
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
    return s;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

DenseMatrix multiply_transposed(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("multiply_transposed: row counts differ");
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const auto ak = a.row(k);
        const auto bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto ci = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

DenseMatrix gram(const DenseMatrix& a) {
    const std::size_t n = a.cols();
    DenseMatrix g(n, n);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const auto ak = a.row(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            auto gi = g.row(i);
            for (std::size_t j = i; j < n; ++j) gi[j] += aki * ak[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: length mismatch");
    std::vector<double> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) throw DimensionError("matvec_transposed: length mismatch");
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double xk = x[k];
        const auto ak = a.row(k);
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ak[j] * xk;
    }
    return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTolerance = 1e-14;
constexpr double kSymmetryTolerance = 1e-12;

double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p)
        for (std::size_t q = p + 1; q < a.cols(); ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
}

} // namespace

EigenPair sym_eig(const DenseMatrix& input) {
    if (!input.square()) {
        throw DimensionError("sym_eig: expected a square matrix, got " +
                             std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
    }
    if (!input.all_finite()) throw ConfigError("sym_eig: matrix has non-finite entries");

    const std::size_t n = input.rows();
    const double scale = input.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) > kSymmetryTolerance * scale) {
                throw SymmetryError("sym_eig: entries (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") and their transpose differ");
            }

    DenseMatrix a = input;
    DenseMatrix v = DenseMatrix::identity(n);
    const double threshold = kOffDiagonalTolerance * input.frobenius_norm();

    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm(a) <= threshold) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Late sweeps: an element below the diagonal's rounding floor is zero.
                const double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(app) + g == std::abs(app) &&
                    std::abs(aqq) + g == std::abs(aqq)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }

                const double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = (theta >= 0.0 ? 1.0 : -1.0) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - s * akq;
                    a(k, q) = a(q, k) = s * akp + c * akq;
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;

                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged && off_diagonal_norm(a) > threshold) {
        throw ConvergenceError("sym_eig: no convergence after " + std::to_string(kMaxSweeps) +
                                   " sweeps",
                               off_diagonal_norm(a), kMaxSweeps);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenPair out{std::vector<double>(n), DenseMatrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.eigenvalues[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, c) = v(r, order[c]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

Cholesky::Cholesky(const DenseMatrix& a) : lower_(a.rows(), a.cols()) {
    if (!a.square()) throw DimensionError("Cholesky: expected a square matrix");
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= lower_(j, k) * lower_(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw DefinitenessError("Cholesky: matrix is not positive definite (pivot " +
                                    std::to_string(j) + " = " + std::to_string(d) + ")");
        }
        const double ljj = std::sqrt(d);
        lower_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
            lower_(i, j) = s / ljj;
        }
    }
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw DimensionError("Cholesky::solve: right-hand side length mismatch");
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * x[k];
        x[i] = s / lower_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= lower_(k, i) * x[k];
        x[i] = s / lower_(i, i);
    }
    return x;
}

std::vector<double> spd_solve(const DenseMatrix& a, std::span<const double> b) {
    if (a.rows() != b.size()) throw DimensionError("spd_solve: right-hand side length mismatch");
    return Cholesky(a).solve(b);
}

// ---------------------------------------------------------------------------
// Bessel J0
// ---------------------------------------------------------------------------

namespace {

constexpr double kSeriesLimit = 12.0;

double j0_series(double x) {
    const double z = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -z / (static_cast<double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::max(1.0, std::abs(sum))) break;
    }
    return sum;
}

// Hankel expansion: J0 = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4.
// Coefficients a_k = prod_{j<=k} (2j-1)^2 / (k! 8^k); P takes even k, Q odd k,
// each with alternating signs. Summed until the terms stop shrinking.
double j0_asymptotic(double x) {
    double p = 0.0;
    double q = 0.0;
    double a = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 60; ++k) {
        if (k > 0) {
            const double odd = 2.0 * k - 1.0;
            a *= odd * odd / (8.0 * k * x);
        }
        if (a >= prev) break;
        prev = a;
        const double sign = (k / 2) % 2 == 0 ? 1.0 : -1.0;
        if (k % 2 == 0)
            p += sign * a;
        else
            q -= sign * a;
        if (a < 1e-18) break;
    }
    const double chi = x - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace

double bessel_j0(double x) {
    const double ax = std::abs(x);
    return ax <= kSeriesLimit ? j0_series(ax) : j0_asymptotic(ax);
}

// ---------------------------------------------------------------------------
// Two-variable NNLS
// ---------------------------------------------------------------------------

double nnls_objective(const DenseMatrix& xi, std::span<const double> phi,
                      std::array<double, 2> sigma) {
    double s = 0.0;
    for (std::size_t i = 0; i < xi.rows(); ++i) {
        const double r = phi[i] - xi(i, 0) * sigma[0] - xi(i, 1) * sigma[1];
        s += r * r;
    }
    return 0.5 * s;
}

Nnls2Result nnls_2var(const DenseMatrix& xi, std::span<const double> phi) {
    if (xi.cols() != 2) throw DimensionError("nnls_2var: design must have exactly 2 columns");
    if (xi.rows() != phi.size()) throw DimensionError("nnls_2var: design/rhs length mismatch");
    if (xi.rows() < 2) throw DimensionError("nnls_2var: need at least 2 equations");

    // Normal equations.
    double g00 = 0.0, g01 = 0.0, g11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (std::size_t i = 0; i < xi.rows(); ++i) {
        g00 += xi(i, 0) * xi(i, 0);
        g01 += xi(i, 0) * xi(i, 1);
        g11 += xi(i, 1) * xi(i, 1);
        b0 += xi(i, 0) * phi[i];
        b1 += xi(i, 1) * phi[i];
    }

    std::vector<std::array<double, 2>> candidates{{0.0, 0.0}};
    if (g00 > 0.0 && b0 > 0.0) candidates.push_back({b0 / g00, 0.0});
    if (g11 > 0.0 && b1 > 0.0) candidates.push_back({0.0, b1 / g11});

    const double det = g00 * g11 - g01 * g01;
    const double eps = std::numeric_limits<double>::epsilon();
    if (det > 64.0 * eps * g00 * g11) {
        const std::array<double, 2> both{(g11 * b0 - g01 * b1) / det, (g00 * b1 - g01 * b0) / det};
        if (both[0] >= 0.0 && both[1] >= 0.0) candidates.push_back(both);
    }

    Nnls2Result best;
    double best_objective = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        const double f = nnls_objective(xi, phi, c);
        if (f < best_objective) {
            best_objective = f;
            best.sigma = c;
        }
    }
    best.residual_norm = std::sqrt(2.0 * best_objective);
    return best;
}

} // namespace rmtsnr
