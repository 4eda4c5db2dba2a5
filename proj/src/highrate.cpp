#include "npquant/highrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "npquant/numerics.hpp"
#include "npquant/parallel.hpp"

namespace npquant {

namespace {

void require_same_grid(const RegularGrid& a, const RegularGrid& b, const char* where) {
  if (!a.same_layout(b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

DensityField power_density(const DensityField& p0, const std::vector<double>& weight,
                           double exponent, const char* where) {
  DensityField out;
  out.grid = p0.grid;
  out.kind = FieldKind::point_density;
  out.values.resize(p0.values.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double prod = p0.values[i] * weight[i];
    out.values[i] = prod > 0.0 ? std::pow(prod, exponent) : 0.0;
    peak = std::max(peak, out.values[i]);
  }
  if (!(peak > 0.0))
    throw std::domain_error(std::string(where) + ": p0*F vanishes everywhere, degenerate");
  out.normalize();
  return out;
}

}  // namespace

DensityField marginal_density_field(const ProcessModel& model, Hypothesis hyp,
                                    const RegularGrid& grid) {
  if (grid.dim() != model.dim())
    throw std::invalid_argument("marginal_density_field: grid dimension mismatch");
  DensityField f;
  f.grid = grid;
  f.kind = FieldKind::probability_density;
  f.values.resize(grid.total_nodes());
  parallel_for(static_cast<std::int64_t>(grid.total_nodes()), [&](std::int64_t i) {
    const auto y = grid.node_point(static_cast<std::size_t>(i));
    f.values[static_cast<std::size_t>(i)] = std::exp(marginal_logpdf(model, hyp, y.data()));
  });
  f.normalize();
  return f;
}

ScoreBundle estimate_Fbar(const ProcessModel& model, const RegularGrid& grid, int k, int n_mc,
                          std::uint64_t seed) {
  if (k < 0) throw std::invalid_argument("estimate_Fbar: k must be >= 0");
  if (n_mc < 1) throw std::invalid_argument("estimate_Fbar: n_mc must be >= 1");
  const int d = model.dim();
  if (grid.dim() != d) throw std::invalid_argument("estimate_Fbar: grid dimension mismatch");

  // one evaluator per replication, each conditioned on its own side windows
  std::vector<GradLogRatioEvaluator> reps;
  reps.reserve(n_mc);
  {
    GradLogRatioEvaluator proto(model, k);
    std::vector<double> left(std::max(1, k * d)), right(std::max(1, k * d));
    for (int j = 0; j < n_mc; ++j) {
      Rng rng(seed, {0xFba2, static_cast<std::uint64_t>(j)});
      for (int m = 0; m < k; ++m) sample_marginal_h0(model, rng, left.data() + m * d);
      for (int m = 0; m < k; ++m) sample_marginal_h0(model, rng, right.data() + m * d);
      GradLogRatioEvaluator ev = proto;
      ev.set_side_window(left.data(), right.data());
      reps.push_back(std::move(ev));
    }
  }

  const std::size_t nodes = grid.total_nodes();
  ScoreBundle out;
  out.dim = d;
  out.fbar.grid = grid;
  out.fbar.values.assign(nodes, 0.0);
  out.fbar.stderrs.assign(nodes, 0.0);
  out.second_moments.assign(nodes * d * d, 0.0);

  parallel_for(static_cast<std::int64_t>(nodes), [&](std::int64_t node) {
    const auto y = grid.node_point(static_cast<std::size_t>(node));
    std::vector<double> g(d);
    double s1 = 0.0, s2 = 0.0;
    double* mom = out.second_moments.data() + static_cast<std::size_t>(node) * d * d;
    for (int j = 0; j < n_mc; ++j) {
      reps[j].eval(y.data(), g.data());
      double norm2 = 0.0;
      for (int c = 0; c < d; ++c) norm2 += g[c] * g[c];
      s1 += norm2;
      s2 += norm2 * norm2;
      for (int c1 = 0; c1 < d; ++c1)
        for (int c2 = 0; c2 < d; ++c2) mom[c1 * d + c2] += g[c1] * g[c2];
    }
    const double mean = s1 / n_mc;
    out.fbar.values[static_cast<std::size_t>(node)] = mean;
    const double var = std::max(0.0, s2 / n_mc - mean * mean);
    out.fbar.stderrs[static_cast<std::size_t>(node)] =
        n_mc > 1 ? std::sqrt(var / (n_mc - 1)) : 0.0;
    for (int c = 0; c < d * d; ++c) mom[c] /= n_mc;
  });
  return out;
}

ScoreField compute_F(const ScoreBundle& bundle, const CovariationProfile& profile) {
  const int d = bundle.dim;
  if (profile.dim() != d) throw std::invalid_argument("compute_F: profile dimension mismatch");
  ScoreField out;
  out.grid = bundle.fbar.grid;
  const std::size_t nodes = out.grid.total_nodes();
  out.values.resize(nodes);
  out.stderrs.resize(nodes);

  if (profile.is_isotropic()) {
    const double nu = profile.nu();
    for (std::size_t i = 0; i < nodes; ++i) {
      out.values[i] = nu * bundle.fbar.values[i];
      out.stderrs[i] = bundle.fbar.stderrs.empty() ? 0.0 : nu * bundle.fbar.stderrs[i];
    }
    return out;
  }

  if (bundle.second_moments.size() != nodes * static_cast<std::size_t>(d) * d)
    throw std::invalid_argument("compute_F: bundle carries no second moments");
  for (std::size_t i = 0; i < nodes; ++i) {
    const Matrix& m = profile.at(i);
    double tr = 0.0;
    const double* mom = bundle.second_moments.data() + i * d * d;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) tr += m(a, b) * mom[b * d + a];
    out.values[i] = tr;
    // relative error inherited from the Fbar estimate
    const double fbar = bundle.fbar.values[i];
    out.stderrs[i] = (fbar > 0.0 && !bundle.fbar.stderrs.empty())
                         ? std::abs(tr) * bundle.fbar.stderrs[i] / fbar
                         : 0.0;
  }
  return out;
}

double compute_De(const DensityField& p0, const ScoreField& f, const DensityField& zeta,
                  int d, std::vector<std::size_t>* degenerate_nodes) {
  require_same_grid(p0.grid, f.grid, "compute_De");
  require_same_grid(p0.grid, zeta.grid, "compute_De");
  if (degenerate_nodes) degenerate_nodes->clear();
  const double expo = 2.0 / d;
  double acc = 0.0;
  bool degenerate = false;
  for (std::size_t i = 0; i < p0.values.size(); ++i) {
    const double num = p0.values[i] * f.values[i];
    if (num == 0.0) continue;
    if (zeta.values[i] <= 0.0) {
      degenerate = true;
      if (degenerate_nodes) degenerate_nodes->push_back(i);
      continue;
    }
    acc += p0.grid.quad_weight(i) * num / std::pow(zeta.values[i], expo);
  }
  if (degenerate) return std::numeric_limits<double>::infinity();
  return 0.5 * acc;
}

DensityField optimal_density_scalar(const DensityField& p0, const ScoreField& f) {
  if (p0.grid.dim() != 1) throw std::invalid_argument("optimal_density_scalar: d must be 1");
  return optimal_density_vector(p0, f, 1);
}

DensityField optimal_density_vector(const DensityField& p0, const ScoreField& f, int d) {
  require_same_grid(p0.grid, f.grid, "optimal_density_vector");
  return power_density(p0, f.values, static_cast<double>(d) / (d + 2),
                       "optimal_density_vector");
}

double holder_lower_bound(const DensityField& p0, const ScoreField& f, int d) {
  require_same_grid(p0.grid, f.grid, "holder_lower_bound");
  const double expo = static_cast<double>(d) / (d + 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < p0.values.size(); ++i) {
    const double prod = p0.values[i] * f.values[i];
    if (prod > 0.0) acc += p0.grid.quad_weight(i) * std::pow(prod, expo);
  }
  return 0.5 * std::pow(acc, 1.0 / expo);
}

DensityField bennett_mse_density(const DensityField& p0, int d) {
  std::vector<double> ones(p0.values.size(), 1.0);
  return power_density(p0, ones, static_cast<double>(d) / (d + 2), "bennett_mse_density");
}

DensityField floored_positive(DensityField field, double rel_floor) {
  double peak = 0.0;
  for (double v : field.values) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw std::domain_error("floored_positive: field has no mass");
  const double floor = rel_floor * peak;
  for (double& v : field.values) v = std::max(v, floor);
  field.normalize();
  return field;
}

DensityField target_density_qstar(const DensityField& p0, const ScoreField& fbar) {
  require_same_grid(p0.grid, fbar.grid, "target_density_qstar");
  return power_density(p0, fbar.values, 1.0, "target_density_qstar");
}

EllipsoidAlignment ellipsoid_alignment(const std::vector<double>& phi, const Matrix& lbar) {
  const std::size_t d = lbar.rows();
  if (phi.size() != d) throw std::invalid_argument("ellipsoid_alignment: phi size mismatch");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(phi[i] > 0.0)) throw std::invalid_argument("ellipsoid_alignment: phi must be positive");
    if (i > 0 && phi[i] < phi[i - 1])
      throw std::invalid_argument("ellipsoid_alignment: phi must be ascending");
  }
  const SymmetricEigen eig = symmetric_eigen(lbar);  // ascending eigenvalues
  EllipsoidAlignment out;
  out.rotation = Matrix(d, d);
  out.attained = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t rev = d - 1 - i;  // pair smallest phi with largest lambda
    out.attained += phi[i] * eig.eigenvalues[rev];
    for (std::size_t r = 0; r < d; ++r) out.rotation(r, i) = eig.eigenvectors(r, rev);
  }
  return out;
}

ScoreField gupta_hero_F(const DensityField& p0, const DensityField& p1,
                        const CovariationProfile& profile) {
  require_same_grid(p0.grid, p1.grid, "gupta_hero_F");
  const RegularGrid& grid = p0.grid;
  const int d = grid.dim();
  if (profile.dim() != d) throw std::invalid_argument("gupta_hero_F: profile dimension mismatch");

  std::vector<double> lambda(grid.total_nodes());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double l0 = p0.values[i] > 0.0 ? std::log(p0.values[i]) : kLogFloor;
    const double l1 = p1.values[i] > 0.0 ? std::log(p1.values[i]) : kLogFloor;
    lambda[i] = l0 - l1;
  }

  ScoreField out;
  out.grid = grid;
  out.values.assign(grid.total_nodes(), 0.0);

  std::vector<std::size_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a)
    stride[a] = stride[a + 1] * static_cast<std::size_t>(grid.nodes(a + 1));

  std::vector<int> idx(d);
  std::vector<double> g(d);
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    grid.node_multi(i, idx.data());
    for (int a = 0; a < d; ++a) {
      const double h = grid.step(a);
      if (idx[a] == 0)
        g[a] = (lambda[i + stride[a]] - lambda[i]) / h;
      else if (idx[a] == grid.nodes(a) - 1)
        g[a] = (lambda[i] - lambda[i - stride[a]]) / h;
      else
        g[a] = (lambda[i + stride[a]] - lambda[i - stride[a]]) / (2.0 * h);
    }
    const Matrix& m = profile.at(i);
    double v = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) v += g[a] * m(a, b) * g[b];
    out.values[i] = v;
  }
  return out;
}

}  // namespace npquant
