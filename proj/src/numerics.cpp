#include "npquant/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace npquant {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double normal_logpdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - 0.5 * kLogTwoPi;
}

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration from the Chebyshev-based initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

QuadRule gauss_hermite_normal(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n must be positive");
  // orthonormal Hermite recurrence (weight e^{-x^2}); Christoffel weights
  const double pi_quarter = std::pow(M_PI, -0.25);
  auto eval = [&](double x, double& pn, double& pn1) {
    double p0 = pi_quarter, p1 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = x * std::sqrt(2.0 / (k + 1)) * p1 - std::sqrt(double(k) / (k + 1)) * p2;
    }
    pn = p0;
    pn1 = p1;
  };
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // classic initial guesses, largest root first
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(n, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[n - 1];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[n - 2];
    else
      z = 2.0 * z - r.nodes[n - i + 1];
    for (int iter = 0; iter < 200; ++iter) {
      double pn, pn1;
      eval(z, pn, pn1);
      const double deriv = std::sqrt(2.0 * n) * pn1;
      const double dz = pn / deriv;
      z -= dz;
      if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
    }
    r.nodes[n - 1 - i] = z;
    r.nodes[i] = -z;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.nodes[i];
    double chris = 0.0;
    double p0 = pi_quarter, p1 = 0.0;
    chris += p0 * p0;
    for (int k = 0; k + 1 < n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = x * std::sqrt(2.0 / (k + 1)) * p1 - std::sqrt(double(k) / (k + 1)) * p2;
      chris += p0 * p0;
    }
    r.weights[i] = 1.0 / chris;
    total += r.weights[i];
  }
  // switch from weight e^{-x^2} to the standard normal: x -> sqrt(2) x,
  // weights normalized to unit mass
  for (int i = 0; i < n; ++i) {
    r.nodes[i] *= std::sqrt(2.0);
    r.weights[i] /= total;
  }
  return r;
}

double log_sum_exp(const double* v, std::size_t n) {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(v, v + n);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace npquant
