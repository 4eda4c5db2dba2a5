#include "npquant/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "npquant/numerics.hpp"
#include "npquant/parallel.hpp"

namespace npquant {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// scaled HMM forward pass over continuous observations; returns prefix
// log-densities into out (resized to window length)
void hmm_forward_logdensity(const FiniteStateHmm& m, const Matrix& q,
                            const ObservationWindow& w, std::vector<double>& out) {
  const int ns = m.num_states;
  std::vector<double> alpha(ns), nxt(ns);
  out.resize(w.size());
  double logp = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double* y = w.sample(k);
    double c = 0.0;
    if (k == 0) {
      for (int x = 0; x < ns; ++x) {
        alpha[x] = m.initial_dist[x] * observation_kernel(m, x, y);
        c += alpha[x];
      }
    } else {
      for (int x2 = 0; x2 < ns; ++x2) {
        double s = 0.0;
        for (int x1 = 0; x1 < ns; ++x1) s += alpha[x1] * q(x1, x2);
        nxt[x2] = s * observation_kernel(m, x2, y);
        c += nxt[x2];
      }
      std::swap(alpha, nxt);
    }
    if (!(c > 0.0)) throw std::domain_error("joint_log_density: sample outside domain");
    for (double& a : alpha) a /= c;
    logp += std::log(c);
    out[k] = logp;
  }
}

// forward pass on quantized observations through a cell-likelihood table
void hmm_forward_quantized(const FiniteStateHmm& m, const Matrix& q,
                           const std::vector<double>& cell_prob, std::size_t num_cells,
                           const std::vector<int>& cells, std::vector<double>& out) {
  const int ns = m.num_states;
  std::vector<double> alpha(ns), nxt(ns);
  out.resize(cells.size());
  double logp = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const std::size_t z = static_cast<std::size_t>(cells[k]);
    double c = 0.0;
    if (k == 0) {
      for (int x = 0; x < ns; ++x) {
        alpha[x] = m.initial_dist[x] * cell_prob[x * num_cells + z];
        c += alpha[x];
      }
    } else {
      for (int x2 = 0; x2 < ns; ++x2) {
        double s = 0.0;
        for (int x1 = 0; x1 < ns; ++x1) s += alpha[x1] * q(x1, x2);
        nxt[x2] = s * cell_prob[x2 * num_cells + z];
        c += nxt[x2];
      }
      std::swap(alpha, nxt);
    }
    if (!(c > 0.0)) {
      logp = kLogFloor;
      out[k] = logp;
      continue;
    }
    for (double& a : alpha) a /= c;
    logp += std::log(c);
    out[k] = logp;
  }
}

// prefix log-densities of a Gauss model window, one component at a time
void gauss_prefix_logdensity(const GaussLinearModel& m, Hypothesis hyp,
                             const ObservationWindow& w, std::vector<double>& out) {
  const std::size_t n = w.size();
  out.assign(n, 0.0);
  if (hyp == Hypothesis::H0) {
    const double var = m.h0_marginal_variance();
    const double sd = std::sqrt(var);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (int c = 0; c < m.dim; ++c) acc += normal_logpdf(w.sample(k)[c], 0.0, sd);
      out[k] = acc;
    }
    return;
  }
  if (m.kind == GaussLinearModel::Kind::AR1) {
    // exact Kalman recursion per component on the latent AR(1) signal
    const double a = m.ar_coefficient;
    const double vx = m.component_signal_variance();
    const double vw = m.component_noise_variance();
    const double vi = (1.0 - a * a) * vx;
    for (int c = 0; c < m.dim; ++c) {
      double mean = 0.0, var = vx;
      for (std::size_t k = 0; k < n; ++k) {
        const double s = var + vw;
        const double y = w.sample(k)[c];
        out[k] += normal_logpdf(y, mean, std::sqrt(s));
        const double gain = var / s;
        const double post_mean = mean + gain * (y - mean);
        const double post_var = (1.0 - gain) * var;
        mean = a * post_mean;
        var = a * a * post_var + vi;
      }
    }
    // per-step terms accumulated above; turn them into prefix sums
    for (std::size_t k = 1; k < n; ++k) out[k] += out[k - 1];
    return;
  }
  // MA: banded Toeplitz Cholesky per component (d == 1)
  const auto r = m.component_autocov(hyp, static_cast<int>(m.ma_taps.size()) - 1);
  const BandedToeplitzCholesky chol(r, n);
  std::vector<double> e(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = w.sample(k)[0];
    for (std::size_t j = chol.first_col(k); j < k; ++j) s -= chol.entry(k, j) * e[j];
    e[k] = s / chol.entry(k, k);
    acc += -0.5 * e[k] * e[k] - std::log(chol.entry(k, k)) - 0.5 * kLogTwoPi;
    out[k] = acc;
  }
}

void prefix_logdensity(const ProcessModel& model, Hypothesis hyp, const ObservationWindow& w,
                       std::vector<double>& out) {
  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& m = model.iid();
      const auto& lp = hyp == Hypothesis::H0 ? m.logpdf_h0 : m.logpdf_h1;
      out.resize(w.size());
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (m.bounded) {
          std::vector<double> v(w.sample(k), w.sample(k) + m.dim);
          if (!m.domain.contains(v))
            throw std::domain_error("joint_log_density: sample outside domain");
        }
        acc += lp(w.sample(k));
        out[k] = acc;
      }
      return;
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model.hmm();
      hmm_forward_logdensity(m, hyp == Hypothesis::H0 ? m.transition_h0 : m.transition_h1, w,
                             out);
      return;
    }
    case ProcessModel::Kind::Gauss:
      gauss_prefix_logdensity(model.gauss(), hyp, w, out);
      return;
  }
}

ExponentEstimate batch_mean_estimate(const std::vector<double>& llr, std::int64_t burn_in) {
  constexpr int kBatches = 20;
  const std::int64_t n = static_cast<std::int64_t>(llr.size());
  ExponentEstimate est;
  est.value = -llr.back() / static_cast<double>(n);
  est.path_length = n;
  est.conditioning_depth = burn_in;
  est.method = ExponentMethod::ergodic_average;
  const std::int64_t batch = n / kBatches;
  if (batch >= 1) {
    double mean = 0.0, m2 = 0.0;
    std::vector<double> bm(kBatches);
    for (int b = 0; b < kBatches; ++b) {
      const double lo = b == 0 ? 0.0 : llr[b * batch - 1];
      const double hi = llr[(b + 1) * batch - 1];
      bm[b] = -(hi - lo) / static_cast<double>(batch);
    }
    for (double v : bm) mean += v;
    mean /= kBatches;
    for (double v : bm) m2 += (v - mean) * (v - mean);
    est.standard_error = std::sqrt(m2 / (kBatches - 1) / kBatches);
  }
  return est;
}

}  // namespace

double CellLikelihoodTable::max_deficit() const {
  double d = 0.0;
  for (double v : deficit) d = std::max(d, v);
  return d;
}

double joint_log_density(const ProcessModel& model, Hypothesis hyp,
                         const ObservationWindow& window) {
  if (window.size() == 0) throw std::invalid_argument("joint_log_density: empty window");
  std::vector<double> prefix;
  prefix_logdensity(model, hyp, window, prefix);
  return prefix.back();
}

LogLikelihoodPath llr_path(const ProcessModel& model, const ObservationWindow& window) {
  if (window.size() == 0) throw std::invalid_argument("llr_path: empty window");
  std::vector<double> p0, p1;
  prefix_logdensity(model, Hypothesis::H0, window, p0);
  prefix_logdensity(model, Hypothesis::H1, window, p1);
  LogLikelihoodPath out;
  out.values.resize(window.size());
  for (std::size_t k = 0; k < window.size(); ++k) out.values[k] = p1[k] - p0[k];
  return out;
}

ExponentEstimate estimate_exponent_raw(const ProcessModel& model, std::int64_t n,
                                       std::uint64_t seed) {
  if (n < 1000) throw std::invalid_argument("estimate_exponent_raw: n must be >= 1000");
  constexpr std::int64_t kBurnIn = 512;
  const ObservationWindow w = sample_path(model, Hypothesis::H0, n, kBurnIn, seed);
  const LogLikelihoodPath llr = llr_path(model, w);
  return batch_mean_estimate(llr.values, kBurnIn);
}

// ---- cell likelihoods --------------------------------------------------------

namespace {

// deterministic per-cell bounding boxes from a coarse nearest-cell scan
std::vector<Box> cell_bounding_boxes(const CellPartition& q, int scan_per_axis) {
  const int d = q.dim();
  const Box& box = q.domain();
  const std::size_t nc = q.num_cells();
  std::vector<double> lo(nc * d, kInf), hi(nc * d, -kInf);
  std::vector<double> y(d);
  std::vector<int> idx(d, 0);
  std::vector<double> steps(d);
  for (int a = 0; a < d; ++a) steps[a] = (box.hi[a] - box.lo[a]) / (scan_per_axis - 1);
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(scan_per_axis);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % scan_per_axis);
      rem /= scan_per_axis;
      y[a] = box.lo[a] + idx[a] * steps[a];
    }
    const int j = q.cell_index(y.data());
    for (int a = 0; a < d; ++a) {
      lo[j * d + a] = std::min(lo[j * d + a], y[a]);
      hi[j * d + a] = std::max(hi[j * d + a], y[a]);
    }
  }
  std::vector<Box> out(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    Box b;
    b.lo.resize(d);
    b.hi.resize(d);
    for (int a = 0; a < d; ++a) {
      if (lo[j * d + a] > hi[j * d + a]) {  // cell missed by the scan
        b.lo[a] = box.lo[a];
        b.hi[a] = box.hi[a];
      } else {
        b.lo[a] = std::max(box.lo[a], lo[j * d + a] - 1.5 * steps[a]);
        b.hi[a] = std::min(box.hi[a], hi[j * d + a] + 1.5 * steps[a]);
      }
    }
    out[j] = b;
  }
  return out;
}

}  // namespace

CellLikelihoodTable cell_likelihoods(const FiniteStateHmm& model, const CellPartition& q,
                                     int mc_per_cell, std::uint64_t seed) {
  if (q.dim() != model.dim)
    throw std::invalid_argument("cell_likelihoods: quantizer dimension mismatch");
  const Box domain = Box::cube(model.dim, model.truncation_m);
  for (int a = 0; a < model.dim; ++a)
    if (std::abs(q.domain().lo[a] - domain.lo[a]) > 1e-9 ||
        std::abs(q.domain().hi[a] - domain.hi[a]) > 1e-9)
      throw std::invalid_argument("cell_likelihoods: quantizer domain differs from model domain");
  if (mc_per_cell < 1) throw std::invalid_argument("cell_likelihoods: mc_per_cell must be >= 1");

  const std::size_t nc = q.num_cells();
  const int ns = model.num_states;
  const auto boxes = cell_bounding_boxes(q, 201);

  std::vector<double> raw(static_cast<std::size_t>(ns) * nc, 0.0);
  parallel_for(static_cast<std::int64_t>(nc), [&](std::int64_t jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    Rng rng(seed, {0xce77, j});
    const Box& b = boxes[j];
    std::vector<double> y(model.dim);
    std::vector<double> acc(ns, 0.0);
    for (int i = 0; i < mc_per_cell; ++i) {
      for (int a = 0; a < model.dim; ++a) y[a] = rng.uniform(b.lo[a], b.hi[a]);
      if (q.cell_index(y.data()) != static_cast<int>(j)) continue;
      for (int x = 0; x < ns; ++x) acc[x] += observation_kernel(model, x, y.data());
    }
    const double scale = b.volume() / mc_per_cell;
    for (int x = 0; x < ns; ++x) raw[x * nc + j] = acc[x] * scale;
  });

  CellLikelihoodTable tbl;
  tbl.num_states = ns;
  tbl.num_cells = nc;
  tbl.log_prob.resize(raw.size());
  tbl.deficit.resize(ns);
  for (int x = 0; x < ns; ++x) {
    double tot = 0.0;
    for (std::size_t j = 0; j < nc; ++j) tot += raw[x * nc + j];
    if (!(tot > 0.0)) throw std::runtime_error("cell_likelihoods: state has zero total mass");
    tbl.deficit[x] = std::abs(1.0 - tot);
    for (std::size_t j = 0; j < nc; ++j) {
      const double p = raw[x * nc + j] / tot;
      tbl.log_prob[x * nc + j] = p > 0.0 ? std::log(p) : kLogFloor;
    }
  }
  return tbl;
}

std::vector<int> quantize_path(const CellPartition& q, const ObservationWindow& window) {
  const Box& box = q.domain();
  const int d = q.dim();
  std::vector<int> cells(window.size());
  std::vector<double> y(d);
  for (std::size_t k = 0; k < window.size(); ++k) {
    for (int a = 0; a < d; ++a)
      y[a] = std::min(std::max(window.sample(k)[a], box.lo[a]), box.hi[a]);
    cells[k] = q.cell_index(y.data());
  }
  return cells;
}

// ---- i.i.d. cell masses ------------------------------------------------------

namespace {

// per-hypothesis cell masses of an i.i.d. model, normalized to sum to 1
std::vector<double> iid_cell_masses(const IidModel& m, const CellPartition& q, Hypothesis hyp,
                                    std::uint64_t seed, int mc_per_cell) {
  const std::size_t nc = q.num_cells();
  std::vector<double> mass(nc, 0.0);
  const auto& logpdf = hyp == Hypothesis::H0 ? m.logpdf_h0 : m.logpdf_h1;
  if (m.dim == 1) {
    const auto breaks = q.interval_breakpoints();
    for (std::size_t j = 0; j < nc; ++j)
      mass[j] = adaptive_integrate([&](double t) { return std::exp(logpdf(&t)); }, breaks[j],
                                   breaks[j + 1]);
  } else {
    const auto boxes = cell_bounding_boxes(q, 201);
    parallel_for(static_cast<std::int64_t>(nc), [&](std::int64_t jj) {
      const std::size_t j = static_cast<std::size_t>(jj);
      Rng rng(seed, {0x11d, static_cast<std::uint64_t>(hyp), j});
      const Box& b = boxes[j];
      std::vector<double> y(m.dim);
      double acc = 0.0;
      for (int i = 0; i < mc_per_cell; ++i) {
        for (int a = 0; a < m.dim; ++a) y[a] = rng.uniform(b.lo[a], b.hi[a]);
        if (q.cell_index(y.data()) != static_cast<int>(j)) continue;
        acc += std::exp(logpdf(y.data()));
      }
      mass[j] = acc * b.volume() / mc_per_cell;
    });
  }
  double tot = 0.0;
  for (double v : mass) tot += v;
  if (!(tot > 0.0)) throw std::runtime_error("iid_cell_masses: zero total mass");
  for (double& v : mass) v /= tot;
  return mass;
}

}  // namespace

LogLikelihoodPath quantized_llr_path(const ProcessModel& model, const CellPartition& q,
                                     const std::vector<int>& cells,
                                     const GaussQuantizedOptions& opts) {
  if (cells.empty()) throw std::invalid_argument("quantized_llr_path: empty cell sequence");
  for (int c : cells)
    if (c < 0 || static_cast<std::size_t>(c) >= q.num_cells())
      throw std::invalid_argument("quantized_llr_path: cell index out of range");

  LogLikelihoodPath out;
  out.values.resize(cells.size());

  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& m = model.iid();
      const auto m0 = iid_cell_masses(m, q, Hypothesis::H0, opts.emission_seed,
                                      opts.mc_emission);
      const auto m1 = iid_cell_masses(m, q, Hypothesis::H1, opts.emission_seed,
                                      opts.mc_emission);
      double acc = 0.0;
      for (std::size_t k = 0; k < cells.size(); ++k) {
        const std::size_t j = static_cast<std::size_t>(cells[k]);
        acc += std::log(std::max(m1[j], std::exp(kLogFloor))) -
               std::log(std::max(m0[j], std::exp(kLogFloor)));
        out.values[k] = acc;
      }
      return out;
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model.hmm();
      const CellLikelihoodTable tbl =
          cell_likelihoods(m, q, opts.mc_emission, opts.emission_seed);
      std::vector<double> prob(tbl.log_prob.size());
      for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = std::exp(tbl.log_prob[i]);
      std::vector<double> p0, p1;
      hmm_forward_quantized(m, m.transition_h0, prob, tbl.num_cells, cells, p0);
      hmm_forward_quantized(m, m.transition_h1, prob, tbl.num_cells, cells, p1);
      for (std::size_t k = 0; k < cells.size(); ++k) out.values[k] = p1[k] - p0[k];
      return out;
    }
    case ProcessModel::Kind::Gauss: {
      if (!opts.enable_approximation)
        throw std::invalid_argument(
            "quantized_llr_path: exact quantized likelihoods are unavailable for Gauss "
            "models; the discretized-state approximation is disabled");
      const DiscretizedStateFilter filter(model.gauss(), q, opts);
      filter.llr_prefixes(cells, out.values);
      return out;
    }
  }
  return out;
}

ExponentEstimate estimate_exponent_quantized(const ProcessModel& model, const CellPartition& q,
                                             std::int64_t n, std::uint64_t seed,
                                             const GaussQuantizedOptions& opts) {
  if (n < 1) throw std::invalid_argument("estimate_exponent_quantized: n must be >= 1");
  constexpr std::int64_t kBurnIn = 512;
  const ObservationWindow w = sample_path(model, Hypothesis::H0, n, kBurnIn, seed);
  const std::vector<int> cells = quantize_path(q, w);
  const LogLikelihoodPath llr = quantized_llr_path(model, q, cells, opts);
  return batch_mean_estimate(llr.values, kBurnIn);
}

ExponentEstimate exact_discrete_exponent(const ProcessModel& model, const CellPartition& q) {
  if (model.kind() != ProcessModel::Kind::Iid || model.dim() != 1)
    throw std::invalid_argument("exact_discrete_exponent: scalar i.i.d. models only");
  const auto& m = model.iid();
  const auto breaks = q.interval_breakpoints();
  const std::size_t nc = q.num_cells();
  std::vector<double> m0(nc), m1(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    m0[j] = adaptive_integrate([&](double t) { return std::exp(m.logpdf_h0(&t)); }, breaks[j],
                               breaks[j + 1]);
    m1[j] = adaptive_integrate([&](double t) { return std::exp(m.logpdf_h1(&t)); }, breaks[j],
                               breaks[j + 1]);
  }
  double t0 = 0.0, t1 = 0.0;
  for (std::size_t j = 0; j < nc; ++j) {
    t0 += m0[j];
    t1 += m1[j];
  }
  ExponentEstimate est;
  est.method = ExponentMethod::exact_discrete;
  est.path_length = 0;
  for (std::size_t j = 0; j < nc; ++j) {
    const double p = m0[j] / t0, r = m1[j] / t1;
    if (p > 0.0) est.value += p * std::log(p / std::max(r, std::exp(kLogFloor)));
  }
  return est;
}

// ---- discretized-state filter -------------------------------------------------

DiscretizedStateFilter::DiscretizedStateFilter(const GaussLinearModel& model,
                                               const CellPartition& q,
                                               const GaussQuantizedOptions& opts)
    : kind_(model.kind), points_(opts.grid_points) {
  if (points_ < 3) throw std::invalid_argument("DiscretizedStateFilter: grid too small");
  num_cells_ = q.num_cells();
  if (q.dim() != model.dim)
    throw std::invalid_argument("DiscretizedStateFilter: quantizer dimension mismatch");
  rule_ = opts.rule;
  span_ = opts.span_sd;
  mc_emission_ = opts.mc_emission;
  emission_seed_ = opts.emission_seed;
  if (model.kind == GaussLinearModel::Kind::MA)
    build_ma(model, q);
  else
    build_ar1(model, q);
}

// unit-sd latent grid: Gauss-Hermite nodes/weights, or a uniform span with
// normalized Gaussian midpoint weights
void DiscretizedStateFilter::unit_grid(std::vector<double>& nodes,
                                       std::vector<double>& weights) const {
  const int p = points_;
  if (rule_ == LatentGridRule::gauss_hermite) {
    const QuadRule gh = gauss_hermite_normal(p);
    nodes = gh.nodes;
    weights = gh.weights;
    return;
  }
  nodes.resize(p);
  weights.resize(p);
  double wtot = 0.0;
  for (int i = 0; i < p; ++i) {
    nodes[i] = -span_ + 2.0 * span_ * i / (p - 1);
    weights[i] = std::exp(-0.5 * nodes[i] * nodes[i]);
    wtot += weights[i];
  }
  for (double& w : weights) w /= wtot;
}

void DiscretizedStateFilter::build_ma(const GaussLinearModel& model, const CellPartition& q) {
  const int p = points_;
  const int l = static_cast<int>(model.ma_taps.size()) - 1;
  state_dims_ = l;
  const double sw = model.noise_sigma;

  unit_grid(grid_, weights_);

  auto breaks = q.interval_breakpoints();
  breaks.front() = -kInf;  // outer cells absorb the tails
  breaks.back() = kInf;
  auto interval_mass = [&](double mean, std::size_t j) {
    const double hi = breaks[j + 1] == kInf ? 1.0 : normal_cdf((breaks[j + 1] - mean) / sw);
    const double lo = breaks[j] == -kInf ? 0.0 : normal_cdf((breaks[j] - mean) / sw);
    return std::max(hi - lo, 0.0);
  };

  log_h0_mass_.resize(num_cells_);
  for (std::size_t j = 0; j < num_cells_; ++j)
    log_h0_mass_[j] = std::log(std::max(interval_mass(0.0, j), std::exp(kLogFloor)));

  std::size_t joint = 1;
  for (int i = 0; i <= l; ++i) joint *= static_cast<std::size_t>(p);
  emission_.resize(num_cells_ * joint);
  parallel_for(static_cast<std::int64_t>(joint), [&](std::int64_t flat) {
    std::size_t rem = static_cast<std::size_t>(flat);
    double mean = 0.0;
    for (int i = l; i >= 0; --i) {
      mean += model.ma_taps[i] * grid_[rem % p];
      rem /= p;
    }
    for (std::size_t j = 0; j < num_cells_; ++j)
      emission_[j * joint + static_cast<std::size_t>(flat)] = interval_mass(mean, j);
  });
}

void DiscretizedStateFilter::build_ar1(const GaussLinearModel& model, const CellPartition& q) {
  const int p = points_;
  state_dims_ = 2;
  const double a = model.ar_coefficient;
  const double vx = model.component_signal_variance();
  const double sx = std::sqrt(vx);
  const double si = std::sqrt((1.0 - a * a) * vx);
  const double vw = model.component_noise_variance();
  const double sw = std::sqrt(vw);

  unit_grid(grid_, weights_);
  for (double& g : grid_) g *= sx;

  // transition kernel on the fixed grid; for Gauss-Hermite node placement the
  // conditional density is importance-reweighted against the stationary law
  transition_.assign(static_cast<std::size_t>(p) * p, 0.0);
  for (int i = 0; i < p; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(p);
    for (int j = 0; j < p; ++j) {
      const double z = (grid_[j] - a * grid_[i]) / si;
      double lg = -0.5 * z * z;
      if (rule_ == LatentGridRule::gauss_hermite)
        lg += std::log(weights_[j]) + 0.5 * grid_[j] * grid_[j] / vx;
      logs[j] = lg;
      row_max = std::max(row_max, lg);
    }
    double rt = 0.0;
    for (int j = 0; j < p; ++j) {
      transition_[i * p + j] = std::exp(logs[j] - row_max);
      rt += transition_[i * p + j];
    }
    for (int j = 0; j < p; ++j) transition_[i * p + j] /= rt;
  }

  // 2-D emission masses P[C_j | latent=(g_re, g_im)] and the H0 cell masses,
  // by the same stratified cell integration as cell_likelihoods
  const auto boxes = cell_bounding_boxes(q, 201);
  const std::size_t joint = static_cast<std::size_t>(p) * p;
  emission_.assign(num_cells_ * joint, 0.0);
  std::vector<double> h0_raw(num_cells_, 0.0);
  const double v0 = model.h0_marginal_variance();

  parallel_for(static_cast<std::int64_t>(num_cells_), [&](std::int64_t jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    Rng rng(emission_seed_, {0xa21, j});
    const Box& b = boxes[j];
    std::vector<double> fre(p), fim(p);
    double* em = emission_.data() + j * joint;
    double h0acc = 0.0;
    double y[2];
    for (int i = 0; i < mc_emission_; ++i) {
      y[0] = rng.uniform(b.lo[0], b.hi[0]);
      y[1] = rng.uniform(b.lo[1], b.hi[1]);
      if (q.cell_index(y) != static_cast<int>(j)) continue;
      for (int g = 0; g < p; ++g) {
        const double zr = (y[0] - grid_[g]) / sw;
        const double zi = (y[1] - grid_[g]) / sw;
        fre[g] = std::exp(-0.5 * zr * zr);
        fim[g] = std::exp(-0.5 * zi * zi);
      }
      for (int gr = 0; gr < p; ++gr)
        for (int gi = 0; gi < p; ++gi) em[gr * p + gi] += fre[gr] * fim[gi];
      h0acc += std::exp(-0.5 * (y[0] * y[0] + y[1] * y[1]) / v0);
    }
    const double scale = b.volume() / mc_emission_;
    const double gauss_norm = 1.0 / (2.0 * M_PI * vw);
    for (std::size_t t = 0; t < joint; ++t) em[t] *= scale * gauss_norm;
    h0_raw[j] = h0acc * scale / (2.0 * M_PI * v0);
  });

  // renormalize per latent node; record the worst truncation/MC deficit
  log_h0_mass_.resize(num_cells_);
  double h0tot = 0.0;
  for (double v : h0_raw) h0tot += v;
  for (std::size_t j = 0; j < num_cells_; ++j)
    log_h0_mass_[j] = std::log(std::max(h0_raw[j] / h0tot, std::exp(kLogFloor)));
  emission_deficit_ = std::abs(1.0 - h0tot);
  for (std::size_t t = 0; t < joint; ++t) {
    double tot = 0.0;
    for (std::size_t j = 0; j < num_cells_; ++j) tot += emission_[j * joint + t];
    if (!(tot > 0.0)) continue;
    emission_deficit_ = std::max(emission_deficit_, std::abs(1.0 - tot));
    for (std::size_t j = 0; j < num_cells_; ++j) emission_[j * joint + t] /= tot;
  }
}

void DiscretizedStateFilter::llr_prefixes(const std::vector<int>& cells,
                                          std::vector<double>& out) const {
  const std::size_t n = cells.size();
  out.resize(n);
  const int p = points_;
  double log_p1 = 0.0, log_p0 = 0.0;

  if (kind_ == GaussLinearModel::Kind::MA) {
    const int l = state_dims_;
    std::size_t state_size = 1;
    for (int i = 0; i < l; ++i) state_size *= static_cast<std::size_t>(p);
    std::vector<double> w(state_size, 0.0), nw(state_size, 0.0);
    // stationary init: product of innovation weights
    for (std::size_t s = 0; s < state_size; ++s) {
      double v = 1.0;
      std::size_t rem = s;
      for (int i = 0; i < l; ++i) {
        v *= weights_[rem % p];
        rem /= p;
      }
      w[s] = v;
    }
    const std::size_t joint = state_size * static_cast<std::size_t>(p);
    const std::size_t tail = l >= 1 ? state_size / p : 1;  // strides for shifting
    for (std::size_t k = 0; k < n; ++k) {
      const double* em = emission_.data() + static_cast<std::size_t>(cells[k]) * joint;
      double tot = 0.0;
      if (l == 0) {
        for (int i0 = 0; i0 < p; ++i0) tot += weights_[i0] * em[i0];
      } else {
        std::fill(nw.begin(), nw.end(), 0.0);
        // new state (i0, s_head), old state (s_head, i_last)
        for (int i0 = 0; i0 < p; ++i0) {
          const double rho = weights_[i0];
          for (std::size_t head = 0; head < tail; ++head) {
            const double* wrow = w.data() + head * p;
            const double* erow = em + (static_cast<std::size_t>(i0) * tail + head) * p;
            double s = 0.0;
            for (int last = 0; last < p; ++last) s += wrow[last] * erow[last];
            const double val = rho * s;
            nw[static_cast<std::size_t>(i0) * tail + head] = val;
            tot += val;
          }
        }
      }
      if (!(tot > 0.0)) {
        log_p1 += kLogFloor;
      } else {
        log_p1 += std::log(tot);
        if (l >= 1)
          for (std::size_t s = 0; s < state_size; ++s) w[s] = nw[s] / tot;
      }
      log_p0 += log_h0_mass_[cells[k]];
      out[k] = log_p1 - log_p0;
    }
    return;
  }

  // AR1: weights over the joint (re, im) latent grid
  const std::size_t joint = static_cast<std::size_t>(p) * p;
  std::vector<double> w(joint), pred(joint), tmp(joint);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) w[i * p + j] = weights_[i] * weights_[j];
  for (std::size_t k = 0; k < n; ++k) {
    const double* em = emission_.data() + static_cast<std::size_t>(cells[k]) * joint;
    const double* prior = w.data();
    if (k > 0) {
      // predict through the per-component AR kernel: pred = T^t W T
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          double s = 0.0;
          for (int m = 0; m < p; ++m) s += w[i * p + m] * transition_[m * p + j];
          tmp[i * p + j] = s;
        }
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          double s = 0.0;
          for (int m = 0; m < p; ++m) s += transition_[m * p + i] * tmp[m * p + j];
          pred[i * p + j] = s;
        }
      prior = pred.data();
    }
    double tot = 0.0;
    for (std::size_t t = 0; t < joint; ++t) {
      const double v = prior[t] * em[t];
      w[t] = v;
      tot += v;
    }
    if (!(tot > 0.0)) {
      log_p1 += kLogFloor;
    } else {
      log_p1 += std::log(tot);
      for (std::size_t t = 0; t < joint; ++t) w[t] /= tot;
    }
    log_p0 += log_h0_mass_[cells[k]];
    out[k] = log_p1 - log_p0;
  }
}

}  // namespace npquant
