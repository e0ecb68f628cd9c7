#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rclab {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed-row sparse matrix. Immutable once built.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Builds from an unordered entry list. Throws UsageError on out-of-range
    /// indices, duplicate (row, col) pairs or non-finite values.
    static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                      std::vector<Triplet> entries);

    static SparseMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t rows() const noexcept { return n_rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return n_cols_; }
    [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_offsets() const noexcept { return row_ptr_; }
    [[nodiscard]] std::span<const std::uint32_t> column_indices() const noexcept { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Entries in row-major order.
    [[nodiscard]] std::vector<Triplet> triplets() const;

    /// Same pattern, every stored value multiplied by `factor`.
    [[nodiscard]] SparseMatrix scaled(double factor) const;

    [[nodiscard]] DenseMatrix to_dense() const;

    /// out = this * v. `out` must not alias `v`. No dimension checks: hot path.
    void multiply_into(const double* v, double* out) const noexcept {
        for (std::size_t i = 0; i < n_rows_; ++i) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                acc += values_[k] * v[col_idx_[k]];
            }
            out[i] = acc;
        }
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

/// m * v with dimension checking.
Vector sparse_matvec(const SparseMatrix& m, const Vector& v);

/// Solves a * S = b for symmetric positive-definite `a` via Cholesky.
/// Throws SingularMatrixError naming the first non-positive pivot.
DenseMatrix spd_solve(const DenseMatrix& a, const DenseMatrix& b);

struct SpectralRadiusOptions {
    std::size_t krylov_dim = 20;
    /// Upper bound on the Krylov dimension reached by growth across restarts.
    std::size_t max_krylov_dim = 1024;
    std::uint64_t seed = 0x5eed;
};

/// Largest eigenvalue modulus of a square sparse matrix, estimated from Ritz
/// values of a restarted Arnoldi process.  `max_iter` bounds the number of
/// restarts; EstimationError carries the last estimate when it runs out.
double spectral_radius(const SparseMatrix& m, double tol, std::size_t max_iter,
                       const SpectralRadiusOptions& opts = {});

}  // namespace rclab
