#pragma once

// Test-only oracles, independent of the library's computation paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "npquant/linalg.hpp"
#include "npquant/processes.hpp"
#include "npquant/rng.hpp"

namespace oracles {

// joint density of a finite-state HMM window by exhaustive path enumeration
inline double hmm_enumerated_log_density(const npquant::FiniteStateHmm& m,
                                         const npquant::Matrix& transition,
                                         const npquant::ObservationWindow& w) {
  const int ns = m.num_states;
  const std::size_t n = w.size();
  double total = 0.0;
  std::vector<int> path(n, 0);
  for (;;) {
    double p = m.initial_dist[path[0]] * npquant::observation_kernel(m, path[0], w.sample(0));
    for (std::size_t k = 1; k < n; ++k)
      p *= transition(path[k - 1], path[k]) *
           npquant::observation_kernel(m, path[k], w.sample(k));
    total += p;
    std::size_t pos = 0;
    while (pos < n && ++path[pos] == ns) path[pos++] = 0;
    if (pos == n) break;
  }
  return std::log(total);
}

// same enumeration over a table of discrete emission probabilities
inline double hmm_enumerated_log_prob(const npquant::FiniteStateHmm& m,
                                      const npquant::Matrix& transition,
                                      const std::vector<double>& cell_prob,
                                      std::size_t num_cells, const std::vector<int>& cells) {
  const int ns = m.num_states;
  const std::size_t n = cells.size();
  double total = 0.0;
  std::vector<int> path(n, 0);
  for (;;) {
    double p = m.initial_dist[path[0]] * cell_prob[path[0] * num_cells + cells[0]];
    for (std::size_t k = 1; k < n; ++k)
      p *= transition(path[k - 1], path[k]) * cell_prob[path[k] * num_cells + cells[k]];
    total += p;
    std::size_t pos = 0;
    while (pos < n && ++path[pos] == ns) path[pos++] = 0;
    if (pos == n) break;
  }
  return std::log(total);
}

// zero-mean Gaussian log-density straight from a dense covariance matrix
inline double dense_gaussian_log_density(const npquant::Matrix& cov,
                                         const std::vector<double>& y) {
  const auto x = npquant::cholesky_solve(cov, y);
  double quad = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) quad += y[i] * x[i];
  return -0.5 * quad - 0.5 * npquant::spd_logdet(cov) -
         0.5 * static_cast<double>(y.size()) * 1.8378770664093454835606594728112;
}

// central finite differences of a scalar function of a d-vector
inline std::vector<double> fd_gradient(const std::function<double(const double*)>& f,
                                       std::vector<double> y, double step) {
  std::vector<double> g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double orig = y[i];
    y[i] = orig + step;
    const double up = f(y.data());
    y[i] = orig - step;
    const double dn = f(y.data());
    y[i] = orig;
    g[i] = (up - dn) / (2.0 * step);
  }
  return g;
}

// two-sample Kolmogorov-Smirnov distance against an analytic CDF
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double c = cdf(samples[i]);
    worst = std::max(worst, std::abs(c - (i + 1) / n));
    worst = std::max(worst, std::abs(c - i / n));
  }
  return worst;
}

// Spearman rank correlation
inline double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

// random orthogonal matrix via Gram-Schmidt on a Gaussian matrix
inline npquant::Matrix random_orthogonal(int d, npquant::Rng& rng) {
  npquant::Matrix q(d, d);
  for (int c = 0; c < d; ++c) {
    std::vector<double> v(d);
    for (int r = 0; r < d; ++r) v[r] = rng.normal();
    for (int p = 0; p < c; ++p) {
      double dot = 0.0;
      for (int r = 0; r < d; ++r) dot += v[r] * q(r, p);
      for (int r = 0; r < d; ++r) v[r] -= dot * q(r, p);
    }
    double norm = 0.0;
    for (int r = 0; r < d; ++r) norm += v[r] * v[r];
    norm = std::sqrt(norm);
    for (int r = 0; r < d; ++r) q(r, c) = v[r] / norm;
  }
  return q;
}

}  // namespace oracles
