#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace npquant {

// Dense column-agnostic row-major matrix, sized for the small systems used
// here (likelihood windows, d x d cell moments). Not a general linalg library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& b) const {
    if (cols_ != b.rows_) throw std::invalid_argument("Matrix multiply: shape mismatch");
    Matrix c(rows_, b.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double v = (*this)(i, k);
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += v * b(k, j);
      }
    return c;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < rows_ && i < cols_; ++i) t += (*this)(i, i);
    return t;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// In-place Cholesky factor L (lower) of a symmetric positive definite matrix.
Matrix cholesky(const Matrix& a);

// Solves a x = b for SPD a via Cholesky.
std::vector<double> cholesky_solve(const Matrix& a, const std::vector<double>& b);

// Log-determinant of an SPD matrix from its Cholesky factor.
double spd_logdet(const Matrix& a);

// One row of the inverse of an SPD matrix (solve a x = e_row).
std::vector<double> spd_inverse_row(const Matrix& a, std::size_t row);

// Symmetric eigendecomposition by cyclic Jacobi rotations.
// Eigenvalues ascending; eigenvectors[i] is the column (eigenvector) for
// eigenvalues[i], returned as a matrix whose column i is that vector.
struct SymmetricEigen {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = 1e-14, int max_sweeps = 64);

// Cholesky factor of an n x n symmetric banded Toeplitz covariance built from
// autocovariances r[0..bw] (r[tau] = 0 beyond bw). The factor is banded with
// the same bandwidth; rows are stored densely within the band. Exact Gaussian
// sampling (y = L e) and log-density (forward-substitute e, accumulate) for
// moving-average-plus-noise covariances both run off these rows.
class BandedToeplitzCholesky {
 public:
  BandedToeplitzCholesky(const std::vector<double>& autocov, std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  // L(k, j) for j in [first_col(k), k]; zero outside the band.
  std::size_t first_col(std::size_t k) const { return k < bw_ ? 0 : k - bw_; }
  double entry(std::size_t k, std::size_t j) const {
    return rows_[k * (bw_ + 1) + (j - first_col(k))];
  }

 private:
  std::size_t n_ = 0, bw_ = 0;
  std::vector<double> rows_;  // row k packed from first_col(k)
};

}  // namespace npquant
