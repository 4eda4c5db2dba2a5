#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace npquant {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// probabilities below exp(kLogFloor) are floored there to keep log-domain
// arithmetic free of -inf
inline constexpr double kLogFloor = -745.0;

double normal_cdf(double x);
double normal_logpdf(double x, double mean, double stddev);

// nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1]
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadRule gauss_legendre(int n);

// nodes and probability weights for E[f(Z)], Z ~ N(0,1), by Gauss-Hermite
// quadrature; nodes ascending, weights sum to 1
QuadRule gauss_hermite_normal(int n);

// integral of f over [a, b] with an n-point Gauss-Legendre rule
template <typename F>
double gl_integrate(const F& f, double a, double b, const QuadRule& rule) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return s * half;
}

// adaptive panel subdivision until the estimate stabilizes
template <typename F>
double adaptive_integrate(const F& f, double a, double b, double rel_tol = 1e-12,
                          int max_depth = 14) {
  static const QuadRule rule = gauss_legendre(40);
  struct Rec {
    double a, b, whole;
    int depth;
  };
  const double whole0 = gl_integrate(f, a, b, rule);
  std::vector<Rec> stack{{a, b, whole0, 0}};
  double total = 0.0;
  while (!stack.empty()) {
    const Rec r = stack.back();
    stack.pop_back();
    const double m = 0.5 * (r.a + r.b);
    const double left = gl_integrate(f, r.a, m, rule);
    const double right = gl_integrate(f, m, r.b, rule);
    const double err = left + right - r.whole;
    const double scale = 1.0 + (left + right < 0 ? -(left + right) : left + right);
    if (r.depth >= max_depth || (err < 0 ? -err : err) <= rel_tol * scale) {
      total += left + right;
    } else {
      stack.push_back({r.a, m, left, r.depth + 1});
      stack.push_back({m, r.b, right, r.depth + 1});
    }
  }
  return total;
}

double log_sum_exp(const double* v, std::size_t n);

}  // namespace npquant
