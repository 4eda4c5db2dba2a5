#include <doctest.h>

#include <cmath>

#include "npquant/likelihood.hpp"
#include "npquant/numerics.hpp"
#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"
#include "oracles.hpp"

using namespace npquant;

namespace {

FiniteStateHmm small_hmm(int states) {
  FiniteStateHmm m;
  m.num_states = states;
  m.dim = 1;
  m.noise_sigma = 0.7;
  m.truncation_m = 4.0;
  for (int x = 0; x < states; ++x)
    m.emission_centers.push_back({-1.0 + 2.0 * x / (states - 1)});
  m.transition_h0 = Matrix(states, states, 1.0 / states);
  m.transition_h1 = Matrix(states, states);
  for (int i = 0; i < states; ++i)
    for (int j = 0; j < states; ++j)
      m.transition_h1(i, j) = i == j ? 0.8 : 0.2 / (states - 1);
  m.initial_dist.assign(states, 1.0 / states);
  m.validate_and_finalize();
  return m;
}

ProcessModel identical_pair() {
  IidModel m;
  m.dim = 1;
  m.domain = Box::cube(1, 8.0);
  m.bounded = true;
  m.logpdf_h0 = [](const double* y) { return normal_logpdf(y[0], 0.0, 1.0); };
  m.logpdf_h1 = m.logpdf_h0;
  m.sample_h0 = [](Rng& rng, double* out) {
    do {
      out[0] = rng.normal();
    } while (std::abs(out[0]) > 8.0);
  };
  m.sample_h1 = m.sample_h0;
  m.grad_log_ratio = [](const double*, double* g) { g[0] = 0.0; };
  return ProcessModel(std::move(m));
}

}  // namespace

TEST_CASE("HMM forward equals exhaustive enumeration, raw paths") {
  for (int states : {2, 3}) {
    const FiniteStateHmm hm = small_hmm(states);
    const ProcessModel m(hm);
    Rng rng(41);
    for (std::size_t n : {1u, 3u, 5u}) {
      ObservationWindow w;
      w.dim = 1;
      w.first_index = 1;
      for (std::size_t i = 0; i < n; ++i) w.data.push_back(rng.uniform(-3.5, 3.5));
      for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
        const Matrix& q = h == Hypothesis::H0 ? hm.transition_h0 : hm.transition_h1;
        const double oracle = oracles::hmm_enumerated_log_density(hm, q, w);
        const double fwd = joint_log_density(m, h, w);
        CHECK(std::abs(fwd - oracle) / std::abs(oracle) < 1e-12);
      }
    }
  }
}

TEST_CASE("i.i.d. joint density is the sum of marginals") {
  const ProcessModel m(make_gaussian_pair_iid(0, 1, 1, 1));
  ObservationWindow w;
  w.dim = 1;
  w.first_index = 1;
  w.data = {0.4, -1.1};
  const double a = marginal_logpdf(m, Hypothesis::H1, &w.data[0]);
  const double b = marginal_logpdf(m, Hypothesis::H1, &w.data[1]);
  CHECK(joint_log_density(m, Hypothesis::H1, w) == a + b);
}

TEST_CASE("AR(1) single-sample window reduces to the stationary marginal") {
  const ProcessModel m(make_ar_detect_model(0.8, 1.0));
  ObservationWindow w;
  w.dim = 2;
  w.first_index = 1;
  w.data = {0.5, -0.3};
  CHECK(joint_log_density(m, Hypothesis::H1, w) ==
        doctest::Approx(marginal_logpdf(m, Hypothesis::H1, w.data.data())).epsilon(1e-12));
}

TEST_CASE("Kalman and banded-Cholesky paths agree with dense Gaussian oracles") {
  const ProcessModel ar(make_ar_detect_model(0.8, 1.0));
  const ProcessModel ma(make_ma_detect_model({1.06677, -0.59281, 0.09565}, 1.5));
  Rng rng(4);
  const std::size_t n = 6;

  ObservationWindow war;
  war.dim = 2;
  war.first_index = 1;
  for (std::size_t i = 0; i < 2 * n; ++i) war.data.push_back(rng.uniform(-2, 2));
  const auto rar = ar.gauss().component_autocov(Hypothesis::H1, n - 1);
  Matrix cov_ar(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cov_ar(i, j) = rar[i > j ? i - j : j - i];
  double oracle = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = war.sample(i)[comp];
    oracle += oracles::dense_gaussian_log_density(cov_ar, y);
  }
  CHECK(joint_log_density(ar, Hypothesis::H1, war) == doctest::Approx(oracle).epsilon(1e-11));

  ObservationWindow wma;
  wma.dim = 1;
  wma.first_index = 1;
  for (std::size_t i = 0; i < n; ++i) wma.data.push_back(rng.uniform(-3, 3));
  const auto rma = ma.gauss().component_autocov(Hypothesis::H1, 2);
  Matrix cov_ma(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t lag = i > j ? i - j : j - i;
      if (lag < rma.size()) cov_ma(i, j) = rma[lag];
    }
  CHECK(joint_log_density(ma, Hypothesis::H1, wma) ==
        doctest::Approx(oracles::dense_gaussian_log_density(cov_ma, wma.data))
            .epsilon(1e-11));
}

TEST_CASE("llr_path: zero under identical laws, consistent with joint densities") {
  const ProcessModel same = identical_pair();
  const auto w = sample_path(same, Hypothesis::H0, 50, 0, 9);
  const LogLikelihoodPath p = llr_path(same, w);
  for (double v : p.values) CHECK(v == 0.0);

  const ProcessModel m(make_ar_detect_model(0.8, 1.0));
  const auto w2 = sample_path(m, Hypothesis::H1, 40, 16, 10);
  const LogLikelihoodPath p2 = llr_path(m, w2);
  const double direct = joint_log_density(m, Hypothesis::H1, w2) -
                        joint_log_density(m, Hypothesis::H0, w2);
  CHECK(p2.final() == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("raw exponent estimates hit the Gaussian KL divergences") {
  const ProcessModel shift(make_gaussian_pair_iid(0, 1, 1, 1));
  const ExponentEstimate a = estimate_exponent_raw(shift, 200000, 2024);
  CHECK(std::abs(a.value - 0.5) < 3.0 * a.standard_error + 0.01);

  const ProcessModel scale(make_gaussian_pair_iid(0, 1, 0, std::sqrt(2.0)));
  const ExponentEstimate b = estimate_exponent_raw(scale, 200000, 2025);
  const double kl = 0.5 * (0.5 + std::log(2.0) - 1.0);  // 0.09657359027997264
  CHECK(std::abs(b.value - kl) < 3.0 * b.standard_error);

  const ExponentEstimate c = estimate_exponent_raw(identical_pair(), 2000, 1);
  CHECK(c.value == 0.0);
  CHECK_THROWS_AS(estimate_exponent_raw(shift, 100, 1), std::invalid_argument);
}

TEST_CASE("cell likelihood rows normalize and a half-plane split matches quadrature") {
  const FiniteStateHmm hm = make_qpsk_oqpsk_hmm(3.0, 0.6);

  Codebook split;
  split.dim = 2;
  split.domain = Box::cube(2, 3.0);
  split.points = {-1.5, 0.0, 1.5, 0.0};  // boundary is the vertical axis
  const VoronoiQuantizer q(split);
  const CellLikelihoodTable tbl = cell_likelihoods(hm, q, 60000, 5);
  for (int x = 0; x < 4; ++x) {
    double tot = 0.0;
    for (std::size_t j = 0; j < tbl.num_cells; ++j)
      tot += std::exp(tbl.log_prob[x * tbl.num_cells + j]);
    CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
  }
  // dense 2-D quadrature of the state-0 kernel over the left half
  const QuadRule rule = gauss_legendre(96);
  const double left = gl_integrate(
      [&](double u) {
        return gl_integrate(
            [&](double v) {
              const double y[2] = {u, v};
              return observation_kernel(hm, 0, y);
            },
            -3.0, 3.0, rule);
      },
      -3.0, 0.0, rule);
  CHECK(std::exp(tbl.log_prob[0 * 2 + 0]) == doctest::Approx(left).epsilon(2e-3));
  CHECK(left == doctest::Approx(normal_cdf(1.0 / 0.6)).epsilon(2e-3));

  const VoronoiQuantizer whole = uniform_quantizer(Box::cube(2, 3.0), {1, 1});
  const CellLikelihoodTable one = cell_likelihoods(hm, whole, 20000, 6);
  for (int x = 0; x < 4; ++x) CHECK(one.log_prob[x] == doctest::Approx(0.0));
}

TEST_CASE("quantized forward recursion equals enumeration over words") {
  for (int states : {2, 3}) {
    const FiniteStateHmm hm = small_hmm(states);
    const ProcessModel m(hm);
    const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 4.0), {2});
    const GaussQuantizedOptions opts;
    const CellLikelihoodTable tbl = cell_likelihoods(hm, q, opts.mc_emission,
                                                     opts.emission_seed);
    std::vector<double> prob(tbl.log_prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = std::exp(tbl.log_prob[i]);

    std::vector<int> cells = {0, 1, 0, 0, 1};
    for (std::size_t n : {3u, 5u}) {
      const std::vector<int> word(cells.begin(), cells.begin() + n);
      const LogLikelihoodPath path = quantized_llr_path(m, q, word, opts);
      const double oracle =
          oracles::hmm_enumerated_log_prob(hm, hm.transition_h1, prob, 2, word) -
          oracles::hmm_enumerated_log_prob(hm, hm.transition_h0, prob, 2, word);
      CHECK(path.final() == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("i.i.d. quantized path sums per-cell log ratios") {
  const ProcessModel m(make_gaussian_pair_iid(0, 1, 1, 1));
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 8.0), {4});
  const auto breaks = q.interval_breakpoints();
  std::vector<double> lr(4);
  for (int j = 0; j < 4; ++j) {
    const double m1 = adaptive_integrate(
        [&](double t) { return std::exp(normal_logpdf(t, 1.0, 1.0)); }, breaks[j],
        breaks[j + 1]);
    const double m0 = adaptive_integrate(
        [&](double t) { return std::exp(normal_logpdf(t, 0.0, 1.0)); }, breaks[j],
        breaks[j + 1]);
    lr[j] = std::log(m1) - std::log(m0);
  }
  const std::vector<int> word = {0, 3, 2, 2, 1};
  const LogLikelihoodPath path = quantized_llr_path(m, q, word);
  double acc = 0.0;
  for (std::size_t k = 0; k < word.size(); ++k) {
    acc += lr[word[k]];
    CHECK(path.values[k] == doctest::Approx(acc).epsilon(1e-6));
  }
}

TEST_CASE("quantized paths vanish when the hypotheses coincide") {
  const ProcessModel same = identical_pair();
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 8.0), {4});
  const LogLikelihoodPath p = quantized_llr_path(same, q, {0, 2, 1, 3, 3});
  for (double v : p.values) CHECK(v == 0.0);
}

TEST_CASE("exact discrete exponent: quadrature oracle and degenerate partitions") {
  const ProcessModel m(make_gaussian_pair_iid(0, 1, 1, 1));
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 8.0), {4});
  const ExponentEstimate kn = exact_discrete_exponent(m, q);
  // independent Gauss-Legendre oracle on the same cells
  const auto breaks = q.interval_breakpoints();
  const QuadRule rule = gauss_legendre(64);
  double oracle = 0.0;
  std::vector<double> mass0(4), mass1(4);
  double t0 = 0, t1 = 0;
  for (int j = 0; j < 4; ++j) {
    mass0[j] = gl_integrate(
        [](double t) { return std::exp(normal_logpdf(t, 0.0, 1.0)); }, breaks[j],
        breaks[j + 1], rule);
    mass1[j] = gl_integrate(
        [](double t) { return std::exp(normal_logpdf(t, 1.0, 1.0)); }, breaks[j],
        breaks[j + 1], rule);
    t0 += mass0[j];
    t1 += mass1[j];
  }
  for (int j = 0; j < 4; ++j)
    oracle += (mass0[j] / t0) * std::log((mass0[j] / t0) / (mass1[j] / t1));
  CHECK(kn.value == doctest::Approx(oracle).epsilon(1e-8));

  const VoronoiQuantizer single = uniform_quantizer(Box::cube(1, 8.0), {1});
  CHECK(exact_discrete_exponent(m, single).value == 0.0);
}

TEST_CASE("discrete exponent grows under refinement and respects data processing") {
  const ProcessModel m(make_gaussian_pair_iid(0, 1, 1, 1));
  double prev = -1.0;
  for (int n : {2, 4, 8, 16}) {
    const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 8.0), {n});
    const double kn = exact_discrete_exponent(m, q).value;
    CHECK(kn >= prev);
    prev = kn;
  }
  CHECK(prev <= 0.5);  // never exceeds the raw KL rate

  // sampled-path quantized estimates sit below the raw estimate too
  const VoronoiQuantizer q8 = uniform_quantizer(Box::cube(1, 8.0), {8});
  const ExponentEstimate raw = estimate_exponent_raw(m, 50000, 321);
  const ExponentEstimate qn = estimate_exponent_quantized(m, q8, 50000, 321);
  CHECK(qn.value <= raw.value + 3.0 * (raw.standard_error + qn.standard_error));
}

TEST_CASE("quantized exponent through the discretized-state filter stays consistent") {
  const ProcessModel ma(make_ma_detect_model({1.06677, -0.59281, 0.09565}, 1.5, 15.0));
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 15.0), {4});
  const ExponentEstimate raw = estimate_exponent_raw(ma, 20000, 55);
  const ExponentEstimate qn = estimate_exponent_quantized(ma, q, 20000, 55);
  CHECK(qn.value >= 0.0 - 3.0 * qn.standard_error);
  CHECK(qn.value <= raw.value + 3.0 * (raw.standard_error + qn.standard_error));
  GaussQuantizedOptions off;
  off.enable_approximation = false;
  CHECK_THROWS_AS(quantized_llr_path(ma, q, {0, 1}, off), std::invalid_argument);
}

TEST_CASE("hidden-Markov quantized exponent respects data processing") {
  const ProcessModel m(make_qpsk_oqpsk_hmm(3.0, 0.6));
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(2, 3.0), {4, 4});
  const ExponentEstimate raw = estimate_exponent_raw(m, 20000, 71);
  const ExponentEstimate qn = estimate_exponent_quantized(m, q, 20000, 71);
  CHECK(raw.value > 0.0);
  CHECK(qn.value > 0.0);
  CHECK(qn.value <= raw.value + 3.0 * (raw.standard_error + qn.standard_error));
}

TEST_CASE("ergodic estimates are insensitive to extra burn-in") {
  const ProcessModel m(make_ar_detect_model(0.8, 1.0));
  const ExponentEstimate a = estimate_exponent_raw(m, 60000, 8);
  // same machinery, deeper burn-in
  const ObservationWindow w = sample_path(m, Hypothesis::H0, 60000, 4096, 8);
  const LogLikelihoodPath llr = llr_path(m, w);
  const double b = -llr.final() / 60000.0;
  CHECK(std::abs(a.value - b) < 3.0 * (a.standard_error + a.standard_error));
}
