#include "rclab/linalg.hpp"

#include "rclab/errors.hpp"
#include "rclab/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace rclab {

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> entries) {
    if (n_cols > std::numeric_limits<std::uint32_t>::max()) {
        throw UsageError("sparse matrix column count exceeds 32-bit index range");
    }
    for (const auto& e : entries) {
        if (e.row >= n_rows || e.col >= n_cols) {
            throw UsageError("sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                             ") out of range");
        }
        if (!std::isfinite(e.value)) {
            throw UsageError("sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                             ") is not finite");
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_ptr_.assign(n_rows + 1, 0);
    m.col_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (k > 0 && entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
            throw UsageError("duplicate sparse entry (" + std::to_string(entries[k].row) + "," +
                             std::to_string(entries[k].col) + ")");
        }
        m.row_ptr_[entries[k].row + 1]++;
        m.col_idx_.push_back(static_cast<std::uint32_t>(entries[k].col));
        m.values_.push_back(entries[k].value);
    }
    for (std::size_t i = 0; i < n_rows; ++i) {
        m.row_ptr_[i + 1] += m.row_ptr_[i];
    }
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<Triplet> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        entries.push_back({i, i, 1.0});
    }
    return from_triplets(n, n, std::move(entries));
}

std::vector<Triplet> SparseMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < n_rows_; ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            out.push_back({i, col_idx_[k], values_[k]});
        }
    }
    return out;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
    SparseMatrix m = *this;
    for (auto& v : m.values_) {
        v *= factor;
    }
    return m;
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d = DenseMatrix::Zero(static_cast<Eigen::Index>(n_rows_), static_cast<Eigen::Index>(n_cols_));
    for (std::size_t i = 0; i < n_rows_; ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            d(static_cast<Eigen::Index>(i), col_idx_[k]) = values_[k];
        }
    }
    return d;
}

Vector sparse_matvec(const SparseMatrix& m, const Vector& v) {
    if (static_cast<std::size_t>(v.size()) != m.cols()) {
        throw UsageError("sparse_matvec: vector length " + std::to_string(v.size()) +
                         " does not match column count " + std::to_string(m.cols()));
    }
    Vector out(static_cast<Eigen::Index>(m.rows()));
    m.multiply_into(v.data(), out.data());
    return out;
}

namespace {

// Unblocked Cholesky used only to locate the failing pivot after the fast
// factorization reports failure.
std::size_t first_bad_pivot(const DenseMatrix& a) {
    const Eigen::Index n = a.rows();
    DenseMatrix l = DenseMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(d > 0.0)) {
            return static_cast<std::size_t>(j);
        }
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
        }
    }
    return static_cast<std::size_t>(n > 0 ? n - 1 : 0);
}

}  // namespace

DenseMatrix spd_solve(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != a.cols() || a.rows() < 1) {
        throw UsageError("spd_solve: matrix must be square and non-empty");
    }
    if (b.rows() != a.rows() || b.cols() < 1) {
        throw UsageError("spd_solve: right-hand side has " + std::to_string(b.rows()) + " rows, expected " +
                         std::to_string(a.rows()));
    }
    const double scale = a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1e-300)) {
        throw UsageError("spd_solve: matrix is not symmetric");
    }

    Eigen::LLT<DenseMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError(first_bad_pivot(a), "");
    }
    DenseMatrix s = llt.solve(b);
    // One refinement sweep keeps the residual at working precision for
    // moderately ill-conditioned normal matrices.
    DenseMatrix r = b - a * s;
    if (r.norm() > 1e-12 * b.norm()) {
        s += llt.solve(r);
    }
    if (!s.allFinite()) {
        throw SingularMatrixError(first_bad_pivot(a), "solution is not finite");
    }
    return s;
}

double spectral_radius(const SparseMatrix& m, double tol, std::size_t max_iter,
                       const SpectralRadiusOptions& opts) {
    if (m.rows() != m.cols()) {
        throw UsageError("spectral_radius: matrix must be square");
    }
    if (!(tol > 0.0)) {
        throw UsageError("spectral_radius: tolerance must be positive");
    }
    const auto n = static_cast<Eigen::Index>(m.rows());
    if (n == 0) {
        return 0.0;
    }

    Rng rng(opts.seed, Stream::SpectralStart);
    Vector start(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        start[i] = rng.uniform_open(-1.0, 1.0);
    }

    auto dim = static_cast<Eigen::Index>(std::max<std::size_t>(1, opts.krylov_dim));
    const auto dim_cap = std::max(dim, static_cast<Eigen::Index>(opts.max_krylov_dim));
    double estimate = 0.0;

    for (std::size_t attempt = 0; attempt <= max_iter; ++attempt) {
        const Eigen::Index k_max = std::min(dim, n);
        DenseMatrix basis(n, k_max + 1);
        DenseMatrix hess = DenseMatrix::Zero(k_max + 1, k_max);
        double start_norm = start.norm();
        if (!(start_norm > 0.0)) {
            for (Eigen::Index i = 0; i < n; ++i) {
                start[i] = rng.uniform_open(-1.0, 1.0);
            }
            start_norm = start.norm();
        }
        basis.col(0) = start / start_norm;

        Eigen::Index k = k_max;
        bool invariant = false;
        Vector w(n);
        for (Eigen::Index j = 0; j < k_max; ++j) {
            m.multiply_into(basis.col(j).data(), w.data());
            const double w_norm0 = w.norm();
            // Classical Gram-Schmidt, applied twice.
            for (int pass = 0; pass < 2; ++pass) {
                Vector coeffs = basis.leftCols(j + 1).transpose() * w;
                w -= basis.leftCols(j + 1) * coeffs;
                hess.col(j).head(j + 1) += coeffs;
            }
            const double h_next = w.norm();
            hess(j + 1, j) = h_next;
            if (h_next <= 1e-13 * std::max(w_norm0, hess.col(j).head(j + 1).norm()) || h_next == 0.0) {
                k = j + 1;
                invariant = true;
                break;
            }
            basis.col(j + 1) = w / h_next;
        }

        Eigen::EigenSolver<DenseMatrix> eig(hess.topLeftCorner(k, k), true);
        if (eig.info() != Eigen::Success) {
            throw EstimationError("spectral_radius: Ritz eigenproblem failed", estimate);
        }
        const auto& values = eig.eigenvalues();
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < values.size(); ++i) {
            if (std::abs(values[i]) > std::abs(values[best])) {
                best = i;
            }
        }
        estimate = std::abs(values[best]);
        Eigen::VectorXcd y = eig.eigenvectors().col(best);
        y.normalize();
        const double residual = invariant ? 0.0 : hess(k, k - 1) * std::abs(y[k - 1]);
        if (residual <= tol * estimate || invariant) {
            return estimate;
        }

        // Restart from the dominant Ritz vector; real and imaginary parts
        // together span the invariant plane of a complex pair.
        Eigen::VectorXcd ritz = basis.leftCols(k).cast<std::complex<double>>() * y;
        start = ritz.real() + ritz.imag();
        dim = std::min(dim * 2, dim_cap);
    }
    throw EstimationError("spectral_radius: no convergence after " + std::to_string(max_iter) + " restarts",
                          estimate);
}

}  // namespace rclab
