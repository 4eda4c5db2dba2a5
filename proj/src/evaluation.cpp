#include "npquant/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "npquant/numerics.hpp"
#include "npquant/parallel.hpp"

namespace npquant {

double RocCurve::miss_at(double alpha) const {
  if (pfa.empty()) throw std::logic_error("RocCurve::miss_at: empty curve");
  // first point with pfa >= alpha; curve is a step function between samples
  const auto it = std::lower_bound(pfa.begin(), pfa.end(), alpha);
  if (it == pfa.end()) return pmiss.back();
  return pmiss[static_cast<std::size_t>(it - pfa.begin())];
}

RocCurve roc_curve(const ProcessModel& model, const CellPartition& q, std::int64_t n,
                   std::int64_t trials, std::uint64_t seed,
                   const GaussQuantizedOptions& opts, std::string label) {
  if (n < 1 || trials < 1) throw std::invalid_argument("roc_curve: n and trials must be >= 1");

  // per-(model, quantizer) structures built once and shared across trials
  std::unique_ptr<DiscretizedStateFilter> filter;
  std::vector<double> hmm_cell_prob;
  CellLikelihoodTable table;
  std::vector<double> iid_log_ratio;
  switch (model.kind()) {
    case ProcessModel::Kind::Gauss:
      if (!opts.enable_approximation)
        throw std::invalid_argument("roc_curve: Gauss approximation disabled");
      filter = std::make_unique<DiscretizedStateFilter>(model.gauss(), q, opts);
      break;
    case ProcessModel::Kind::Hmm: {
      table = cell_likelihoods(model.hmm(), q, opts.mc_emission, opts.emission_seed);
      hmm_cell_prob.resize(table.log_prob.size());
      for (std::size_t i = 0; i < hmm_cell_prob.size(); ++i)
        hmm_cell_prob[i] = std::exp(table.log_prob[i]);
      break;
    }
    case ProcessModel::Kind::Iid: {
      // quantized LLR is a per-cell lookup; reuse quantized_llr_path once per cell
      std::vector<int> probe(1);
      iid_log_ratio.resize(q.num_cells());
      for (std::size_t j = 0; j < q.num_cells(); ++j) {
        probe[0] = static_cast<int>(j);
        iid_log_ratio[j] = quantized_llr_path(model, q, probe, opts).final();
      }
      break;
    }
  }

  std::vector<double> llr[2];
  llr[0].assign(static_cast<std::size_t>(trials), 0.0);
  llr[1].assign(static_cast<std::size_t>(trials), 0.0);
  for (int h = 0; h < 2; ++h) {
    const Hypothesis hyp = static_cast<Hypothesis>(h);
    parallel_for(trials, [&](std::int64_t t) {
      const std::uint64_t path_seed =
          Rng(seed, {0x20c, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(t)})
              .next_u64();
      const ObservationWindow w = sample_path(model, hyp, n, 256, path_seed);
      const std::vector<int> cells = quantize_path(q, w);
      double value = 0.0;
      switch (model.kind()) {
        case ProcessModel::Kind::Gauss: {
          std::vector<double> prefix;
          filter->llr_prefixes(cells, prefix);
          value = prefix.back();
          break;
        }
        case ProcessModel::Kind::Hmm: {
          const auto& m = model.hmm();
          // forward recursions on the shared cell table
          {
            const int ns = m.num_states;
            std::vector<double> alpha(ns), nxt(ns);
            double lp0 = 0.0, lp1 = 0.0;
            for (int hh = 0; hh < 2; ++hh) {
              const Matrix& qm = hh == 0 ? m.transition_h0 : m.transition_h1;
              double logp = 0.0;
              for (std::size_t k = 0; k < cells.size(); ++k) {
                const std::size_t z = static_cast<std::size_t>(cells[k]);
                double c = 0.0;
                if (k == 0) {
                  for (int x = 0; x < ns; ++x) {
                    alpha[x] = m.initial_dist[x] * hmm_cell_prob[x * table.num_cells + z];
                    c += alpha[x];
                  }
                } else {
                  for (int x2 = 0; x2 < ns; ++x2) {
                    double s = 0.0;
                    for (int x1 = 0; x1 < ns; ++x1) s += alpha[x1] * qm(x1, x2);
                    nxt[x2] = s * hmm_cell_prob[x2 * table.num_cells + z];
                    c += nxt[x2];
                  }
                  std::swap(alpha, nxt);
                }
                if (!(c > 0.0)) {
                  logp += kLogFloor;
                  continue;
                }
                for (double& a : alpha) a /= c;
                logp += std::log(c);
              }
              (hh == 0 ? lp0 : lp1) = logp;
            }
            value = lp1 - lp0;
          }
          break;
        }
        case ProcessModel::Kind::Iid: {
          double acc = 0.0;
          for (int c : cells) acc += iid_log_ratio[static_cast<std::size_t>(c)];
          value = acc;
          break;
        }
      }
      llr[h][static_cast<std::size_t>(t)] = value;
    });
  }

  // exact empirical trade-off: thresholds at every pooled LLR value
  std::vector<double> l0 = llr[0], l1 = llr[1];
  std::sort(l0.begin(), l0.end());
  std::sort(l1.begin(), l1.end());
  std::vector<double> pooled;
  pooled.reserve(l0.size() + l1.size());
  std::merge(l0.begin(), l0.end(), l1.begin(), l1.end(), std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  RocCurve curve;
  curve.trials_per_hypothesis = trials;
  curve.path_length = n;
  curve.label = std::move(label);
  curve.pfa.reserve(pooled.size() + 2);
  curve.pmiss.reserve(pooled.size() + 2);
  const double inv = 1.0 / static_cast<double>(trials);
  curve.pfa.push_back(0.0);
  curve.pmiss.push_back(1.0);
  for (auto it = pooled.rbegin(); it != pooled.rend(); ++it) {
    const double gamma = *it;
    // reject when LLR > gamma
    const std::size_t fa = l0.end() - std::upper_bound(l0.begin(), l0.end(), gamma);
    const std::size_t miss = std::upper_bound(l1.begin(), l1.end(), gamma) - l1.begin();
    curve.pfa.push_back(static_cast<double>(fa) * inv);
    curve.pmiss.push_back(static_cast<double>(miss) * inv);
  }
  curve.pfa.push_back(1.0);
  curve.pmiss.push_back(0.0);
  // collapse duplicate pfa values, keeping the lowest miss
  std::vector<double> fa_out, miss_out;
  for (std::size_t i = 0; i < curve.pfa.size(); ++i) {
    if (!fa_out.empty() && curve.pfa[i] == fa_out.back())
      miss_out.back() = std::min(miss_out.back(), curve.pmiss[i]);
    else {
      fa_out.push_back(curve.pfa[i]);
      miss_out.push_back(curve.pmiss[i]);
    }
  }
  curve.pfa = std::move(fa_out);
  curve.pmiss = std::move(miss_out);
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.pfa.size() < 2) throw std::invalid_argument("auc: need at least 2 points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.pfa.size(); ++i) {
    const double w = curve.pfa[i + 1] - curve.pfa[i];
    const double h = 0.5 * ((1.0 - curve.pmiss[i]) + (1.0 - curve.pmiss[i + 1]));
    area += w * h;
  }
  return area;
}

// ---- empirical zeta and the loss table ---------------------------------------

namespace {

// separable Gaussian smoothing on the grid, border-renormalized
void gaussian_smooth(const RegularGrid& grid, std::vector<double>& values, double bw_steps) {
  if (bw_steps <= 0.0) return;
  const int d = grid.dim();
  const int rad = static_cast<int>(std::ceil(4.0 * bw_steps));
  std::vector<double> kernel(2 * rad + 1);
  for (int o = -rad; o <= rad; ++o)
    kernel[o + rad] = std::exp(-0.5 * (o / bw_steps) * (o / bw_steps));

  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a)
    stride[a] = stride[a + 1] * static_cast<std::size_t>(grid.nodes(a + 1));

  std::vector<double> tmp(values.size());
  std::vector<int> idx(d);
  for (int axis = 0; axis < d; ++axis) {
    const int na = grid.nodes(axis);
    for (std::size_t i = 0; i < values.size(); ++i) {
      grid.node_multi(i, idx.data());
      double acc = 0.0, norm = 0.0;
      const int base = idx[axis];
      for (int o = -rad; o <= rad; ++o) {
        const int j = base + o;
        if (j < 0 || j >= na) continue;
        const double w = kernel[o + rad];
        acc += w * values[i + static_cast<std::size_t>(o) * stride[axis]];
        norm += w;
      }
      tmp[i] = acc / norm;
    }
    std::swap(values, tmp);
  }
}

}  // namespace

DensityField empirical_zeta_field(const CellPartition& q, const CellStats& stats,
                                  const RegularGrid& grid, double bandwidth_steps) {
  DensityField zeta;
  zeta.grid = grid;
  zeta.kind = FieldKind::point_density;
  zeta.values.resize(grid.total_nodes());
  parallel_for(static_cast<std::int64_t>(grid.total_nodes()), [&](std::int64_t i) {
    const auto y = grid.node_point(static_cast<std::size_t>(i));
    const int j = q.cell_index(y.data());
    zeta.values[static_cast<std::size_t>(i)] = stats.zeta[static_cast<std::size_t>(j)];
  });
  gaussian_smooth(grid, zeta.values, bandwidth_steps);
  zeta.normalize();
  return zeta;
}

ComparisonReport exponent_loss_table(const ProcessModel& model,
                                     const std::vector<QuantizerSpec>& quantizers,
                                     const RegularGrid& grid, std::uint64_t seed,
                                     const ExponentLossOptions& opts) {
  const int d = model.dim();
  const DensityField p0 = marginal_density_field(model, Hypothesis::H0, grid);
  const ScoreBundle bundle = estimate_Fbar(model, grid, opts.k, opts.n_mc, seed);
  const ScoreField f = compute_F(bundle, CovariationProfile::isotropic(1.0 / 12.0, d));

  ComparisonReport report;
  report.seed = seed;
  report.holder_bound = holder_lower_bound(p0, f, d);
  for (const QuantizerSpec& spec : quantizers) {
    if (!spec.partition) throw std::invalid_argument("exponent_loss_table: null quantizer");
    ComparisonEntry entry;
    entry.label = spec.label;
    entry.n_cells = spec.partition->num_cells();
    if (spec.analytic_zeta) {
      entry.de = compute_De(p0, f, *spec.analytic_zeta, d);
      entry.de_bandwidth_low = entry.de_bandwidth_high = entry.de;
    } else {
      const CellStats stats =
          cell_stats(*spec.partition,
                     opts.mc_points_per_cell * static_cast<std::int64_t>(entry.n_cells),
                     Rng(seed, {0x57a7}).next_u64());
      const DensityField z2 = empirical_zeta_field(*spec.partition, stats, grid,
                                                   opts.smoothing_bandwidth_steps);
      entry.de = compute_De(p0, f, z2, d);
      const DensityField z1 = empirical_zeta_field(*spec.partition, stats, grid,
                                                   opts.smoothing_bandwidth_steps - 1.0);
      const DensityField z3 = empirical_zeta_field(*spec.partition, stats, grid,
                                                   opts.smoothing_bandwidth_steps + 1.0);
      entry.de_bandwidth_low = compute_De(p0, f, z1, d);
      entry.de_bandwidth_high = compute_De(p0, f, z3, d);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

// ---- convergence diagnostic ---------------------------------------------------

std::vector<ConvergenceRow> convergence_diagnostic(const ProcessModel& model,
                                                   const std::vector<int>& cell_counts,
                                                   int grid_nodes) {
  if (model.kind() != ProcessModel::Kind::Iid || model.dim() != 1)
    throw std::invalid_argument("convergence_diagnostic: scalar i.i.d. models only");
  const auto& m = model.iid();
  const Box domain = m.domain;
  const double lo = domain.lo[0], hi = domain.hi[0];

  const double mass0 =
      adaptive_integrate([&](double t) { return std::exp(m.logpdf_h0(&t)); }, lo, hi);
  const double mass1 =
      adaptive_integrate([&](double t) { return std::exp(m.logpdf_h1(&t)); }, lo, hi);
  const double k_raw = adaptive_integrate(
                           [&](double t) {
                             const double l0 = m.logpdf_h0(&t), l1 = m.logpdf_h1(&t);
                             return std::exp(l0) * (l0 - l1);
                           },
                           lo, hi) /
                           mass0 +
                       std::log(mass1 / mass0);

  const RegularGrid grid(domain, {grid_nodes});
  const DensityField p0 = marginal_density_field(model, Hypothesis::H0, grid);
  const ScoreBundle bundle = estimate_Fbar(model, grid, 0, 1, 0);
  const ScoreField f = compute_F(bundle, CovariationProfile::isotropic(1.0 / 12.0, 1));

  std::vector<ConvergenceRow> rows;
  for (int n_cells : cell_counts) {
    const VoronoiQuantizer q = uniform_quantizer(domain, {n_cells});
    DensityField zeta;
    zeta.grid = grid;
    zeta.kind = FieldKind::point_density;
    zeta.values.assign(grid.total_nodes(), 1.0);
    zeta.normalize();
    ConvergenceRow row;
    row.n_cells = n_cells;
    row.k_raw = k_raw;
    row.k_n = exact_discrete_exponent(model, q).value;
    row.gap = k_raw - row.k_n;
    row.scaled_gap = static_cast<double>(n_cells) * n_cells * row.gap;
    row.de = compute_De(p0, f, zeta, 1);
    rows.push_back(row);
  }
  return rows;
}

// ---- Scenario-3 preflight -----------------------------------------------------

double ma_filter_preflight_error(const GaussLinearModel& model, const CellPartition& q,
                                 const GaussQuantizedOptions& opts) {
  if (model.kind != GaussLinearModel::Kind::MA)
    throw std::invalid_argument("ma_filter_preflight_error: MA models only");
  const DiscretizedStateFilter filter(model, q, opts);
  const std::size_t nc = q.num_cells();
  constexpr int kSteps = 3;

  // joint H1 covariance of 3 consecutive samples
  const auto r = model.component_autocov(Hypothesis::H1,
                                         static_cast<int>(model.ma_taps.size()) - 1);
  Matrix sigma(kSteps, kSteps);
  for (int i = 0; i < kSteps; ++i)
    for (int j = 0; j < kSteps; ++j) {
      const int lag = std::abs(i - j);
      sigma(i, j) = lag < static_cast<int>(r.size()) ? r[lag] : 0.0;
    }
  const Matrix chol = cholesky(sigma);
  const double logdet = 2.0 * (std::log(chol(0, 0)) + std::log(chol(1, 1)) +
                               std::log(chol(2, 2)));

  auto breaks = q.interval_breakpoints();
  const double wide = 12.0 * std::sqrt(model.h1_marginal_variance());
  breaks.front() = std::min(breaks.front(), -wide);
  breaks.back() = std::max(breaks.back(), wide);
  const double sw = model.noise_sigma;

  static const QuadRule rule = gauss_legendre(48);
  auto solve_quadform = [&](const double y[3]) {
    double e[3];
    for (int i = 0; i < 3; ++i) {
      double s = y[i];
      for (int k = 0; k < i; ++k) s -= chol(i, k) * e[k];
      e[i] = s / chol(i, i);
    }
    return e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
  };

  double worst = 0.0;
  std::vector<int> word(kSteps);
  for (std::size_t w0 = 0; w0 < nc; ++w0)
    for (std::size_t w1 = 0; w1 < nc; ++w1)
      for (std::size_t w2 = 0; w2 < nc; ++w2) {
        word = {static_cast<int>(w0), static_cast<int>(w1), static_cast<int>(w2)};
        // H1 mass by tensored Gauss-Legendre quadrature over the cell box
        double mass1 = 0.0;
        const std::size_t idx[3] = {w0, w1, w2};
        for (std::size_t a = 0; a < rule.nodes.size(); ++a)
          for (std::size_t b = 0; b < rule.nodes.size(); ++b)
            for (std::size_t c = 0; c < rule.nodes.size(); ++c) {
              double y[3], jac = 1.0;
              const std::size_t ns[3] = {a, b, c};
              for (int t = 0; t < 3; ++t) {
                const double loe = breaks[idx[t]], hie = breaks[idx[t] + 1];
                y[t] = 0.5 * (loe + hie) + 0.5 * (hie - loe) * rule.nodes[ns[t]];
                jac *= 0.5 * (hie - loe) * rule.weights[ns[t]];
              }
              mass1 += jac * std::exp(-0.5 * solve_quadform(y));
            }
        mass1 *= std::exp(-0.5 * (3.0 * kLogTwoPi + logdet));
        double mass0 = 1.0;
        for (int t = 0; t < 3; ++t) {
          const double hi_cdf =
              breaks[idx[t] + 1] >= wide ? 1.0 : normal_cdf(breaks[idx[t] + 1] / sw);
          const double lo_cdf =
              breaks[idx[t]] <= -wide ? 0.0 : normal_cdf(breaks[idx[t]] / sw);
          mass0 *= hi_cdf - lo_cdf;
        }
        const double oracle = std::log(mass1) - std::log(mass0);
        std::vector<double> prefix;
        filter.llr_prefixes(word, prefix);
        worst = std::max(worst, std::abs(prefix.back() - oracle));
      }
  return worst;
}

void write_roc_csv_file(const std::string& path, const RocCurve& curve) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "pfa,pmiss\n";
  for (std::size_t i = 0; i < curve.pfa.size(); ++i)
    f << format_double(curve.pfa[i]) << "," << format_double(curve.pmiss[i]) << "\n";
}

}  // namespace npquant
