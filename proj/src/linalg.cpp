#include "npquant/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace npquant {

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::domain_error("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& a, const std::vector<double>& b) {
  const Matrix l = cholesky(a);
  const std::size_t n = a.rows();
  if (b.size() != n) throw std::invalid_argument("cholesky_solve: rhs size mismatch");
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

double spd_logdet(const Matrix& a) {
  const Matrix l = cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

std::vector<double> spd_inverse_row(const Matrix& a, std::size_t row) {
  std::vector<double> e(a.rows(), 0.0);
  e.at(row) = 1.0;
  return cholesky_solve(a, e);
}

SymmetricEigen symmetric_eigen(const Matrix& a, double tol, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("symmetric_eigen: matrix not square");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * (1.0 + std::abs(a(i, j))))
        throw std::invalid_argument("symmetric_eigen: matrix not symmetric");

  Matrix d = a;
  // symmetrize roundoff before iterating
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (d(i, j) + d(j, i));
      d(i, j) = d(j, i) = m;
    }
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += d(i, j) * d(i, j);
    if (off < tol * tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(d(p, q)) < 1e-300) continue;
        const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double dkp = d(k, p), dkq = d(k, q);
          d(k, p) = c * dkp - s * dkq;
          d(k, q) = s * dkp + c * dkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double dpk = d(p, k), dqk = d(q, k);
          d(p, k) = c * dpk - s * dqk;
          d(q, k) = s * dpk + c * dqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return d(x, x) < d(y, y); });

  SymmetricEigen out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.eigenvalues[i] = d(order[i], order[i]);
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, i) = v(k, order[i]);
  }
  return out;
}

BandedToeplitzCholesky::BandedToeplitzCholesky(const std::vector<double>& autocov,
                                               std::size_t n)
    : n_(n), bw_(autocov.empty() ? 0 : autocov.size() - 1) {
  if (autocov.empty()) throw std::invalid_argument("BandedToeplitzCholesky: empty autocov");
  rows_.assign(n_ * (bw_ + 1), 0.0);
  auto at = [&](std::size_t k, std::size_t j) -> double& {
    return rows_[k * (bw_ + 1) + (j - first_col(k))];
  };
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t j0 = first_col(k);
    for (std::size_t j = j0; j <= k; ++j) {
      double s = autocov[k - j];
      const std::size_t m0 = std::max(j0, first_col(j));
      for (std::size_t m = m0; m < j; ++m) s -= at(k, m) * at(j, m);
      if (j == k) {
        if (s <= 0.0)
          throw std::domain_error("BandedToeplitzCholesky: covariance not positive definite");
        at(k, k) = std::sqrt(s);
      } else {
        at(k, j) = s / at(j, j);
      }
    }
  }
}

}  // namespace npquant
