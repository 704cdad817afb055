#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rmtsnr {

/// Dense row-major matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<const double> entries() const noexcept { return data_; }
    std::span<double> entries() noexcept { return data_; }

    DenseMatrix transpose() const;

    double max_abs() const noexcept;
    double frobenius_norm() const noexcept;
    double trace() const;
    bool all_finite() const noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without forming the transpose.
DenseMatrix multiply_transposed(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * a, exploiting symmetry.
DenseMatrix gram(const DenseMatrix& a);

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
std::vector<double> matvec_transposed(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct EigenPair {
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below 1e-14 * ||A||_F, at most
/// 100 sweeps. Throws DimensionError for non-square input, SymmetryError when
/// |a_ij - a_ji| exceeds 1e-12 * max|A|, and ConvergenceError when the sweep cap is hit.
EigenPair sym_eig(const DenseMatrix& a);

/// Cholesky factor L of a symmetric positive-definite matrix, A = L L^T.
class Cholesky {
public:
    /// Throws DefinitenessError on a non-positive or non-finite pivot.
    explicit Cholesky(const DenseMatrix& a);

    std::size_t size() const noexcept { return lower_.rows(); }
    std::vector<double> solve(std::span<const double> b) const;
    const DenseMatrix& lower() const noexcept { return lower_; }

private:
    DenseMatrix lower_;
};

std::vector<double> spd_solve(const DenseMatrix& a, std::span<const double> b);

/// Bessel function of the first kind, order zero.
double bessel_j0(double x);

struct Nnls2Result {
    std::array<double, 2> sigma{};
    double residual_norm = 0.0;
};

/// min 0.5 * ||phi - xi * sigma||^2 subject to sigma >= 0, for an n x 2 design.
///
/// Exact: every active set is tried and the feasible candidate with the lowest
/// objective wins. Rank-deficient subproblems are skipped, never reported.
Nnls2Result nnls_2var(const DenseMatrix& xi, std::span<const double> phi);

/// 0.5 * ||phi - xi * sigma||^2
double nnls_objective(const DenseMatrix& xi, std::span<const double> phi,
                      std::array<double, 2> sigma);

} // namespace rmtsnr
