#include "npquant/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "npquant/highrate.hpp"
#include "npquant/parallel.hpp"
#include "npquant/processes.hpp"

namespace npquant {

namespace {
double sq_dist(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}
}  // namespace

void Codebook::validate(bool allow_single) const {
  const std::size_t n = size();
  if (n < (allow_single ? 1u : 2u))
    throw std::invalid_argument("Codebook: need at least 2 points for detection use");
  if (domain.dim() != dim) throw std::invalid_argument("Codebook: domain dimension mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> p(point(j), point(j) + dim);
    if (!domain.contains(p, 1e-12))
      throw std::invalid_argument("Codebook: point outside domain");
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (sq_dist(point(a), point(b), dim) <= 1e-24)
        throw std::invalid_argument("Codebook: points not pairwise distinct");
}

std::vector<double> CellPartition::interval_breakpoints() const {
  throw std::logic_error("interval_breakpoints: partition is not a scalar interval partition");
}

VoronoiQuantizer::VoronoiQuantizer(Codebook codebook, bool allow_single)
    : codebook_(std::move(codebook)) {
  codebook_.validate(allow_single);
}

int VoronoiQuantizer::cell_index(const double* y) const {
  const int d = codebook_.dim;
  for (int i = 0; i < d; ++i)
    if (y[i] < codebook_.domain.lo[i] - 1e-12 || y[i] > codebook_.domain.hi[i] + 1e-12)
      throw std::domain_error("VoronoiQuantizer: point outside domain");
  int best = 0;
  double best_d = sq_dist(y, codebook_.point(0), d);
  const std::size_t n = codebook_.size();
  for (std::size_t j = 1; j < n; ++j) {
    const double dj = sq_dist(y, codebook_.point(j), d);
    if (dj < best_d) {
      best_d = dj;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<double> VoronoiQuantizer::interval_breakpoints() const {
  if (codebook_.dim != 1) return CellPartition::interval_breakpoints();
  std::vector<double> pts(codebook_.points);
  std::sort(pts.begin(), pts.end());
  std::vector<double> b;
  b.reserve(pts.size() + 1);
  b.push_back(codebook_.domain.lo[0]);
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) b.push_back(0.5 * (pts[j] + pts[j + 1]));
  b.push_back(codebook_.domain.hi[0]);
  return b;
}

CompanderQuantizer::CompanderQuantizer(std::vector<double> breakpoints,
                                       std::vector<double> levels)
    : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
  if (breakpoints_.size() != levels_.size() + 1 || levels_.empty())
    throw std::invalid_argument("CompanderQuantizer: need N+1 breakpoints for N levels");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] < breakpoints_[i + 1]))
      throw std::invalid_argument("CompanderQuantizer: breakpoints not strictly increasing");
    if (!(levels_[i] > breakpoints_[i] && levels_[i] < breakpoints_[i + 1]))
      throw std::invalid_argument("CompanderQuantizer: level outside its cell");
  }
  domain_.lo = {breakpoints_.front()};
  domain_.hi = {breakpoints_.back()};
}

int CompanderQuantizer::cell_index(const double* y) const {
  const double v = y[0];
  if (v < domain_.lo[0] - 1e-12 || v > domain_.hi[0] + 1e-12)
    throw std::domain_error("CompanderQuantizer: point outside domain");
  const auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, v);
  return static_cast<int>(it - breakpoints_.begin()) - 1;
}

int nearest_cell(const CellPartition& q, const double* y) { return q.cell_index(y); }

// ---- LBG --------------------------------------------------------------------

LbgResult lbg_train(const std::vector<double>& samples, int dim, const Box& domain,
                    std::size_t n_cells, std::uint64_t seed, const LbgOptions& opts) {
  if (dim < 1 || samples.size() % dim != 0)
    throw std::invalid_argument("lbg_train: bad sample layout");
  const std::size_t n = samples.size() / dim;
  if (n_cells < 1) throw std::invalid_argument("lbg_train: n_cells must be >= 1");
  if (n < 10 * n_cells && n != n_cells)
    throw std::invalid_argument("lbg_train: need at least 10*N training samples");

  const double* s = samples.data();
  Rng rng(seed, {0x16b6});

  // initial codebook: random distinct sample subset
  std::vector<double> cb(n_cells * dim);
  {
    std::vector<std::size_t> chosen;
    chosen.reserve(n_cells);
    int guard = 0;
    while (chosen.size() < n_cells) {
      const std::size_t cand = rng.below(n);
      bool dup = false;
      for (std::size_t prev : chosen)
        if (sq_dist(s + prev * dim, s + cand * dim, dim) <= 1e-24) dup = true;
      if (!dup) chosen.push_back(cand);
      if (++guard > 1000000)
        throw std::invalid_argument("lbg_train: cannot find N distinct samples");
    }
    for (std::size_t j = 0; j < n_cells; ++j)
      std::copy(s + chosen[j] * dim, s + (chosen[j] + 1) * dim, cb.begin() + j * dim);
  }

  std::vector<int> assign(n, 0);
  std::vector<double> dist(n, 0.0);
  auto assignment_pass = [&]() {
    parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
      const double* y = s + static_cast<std::size_t>(i) * dim;
      int best = 0;
      double bd = sq_dist(y, cb.data(), dim);
      for (std::size_t j = 1; j < n_cells; ++j) {
        const double dj = sq_dist(y, cb.data() + j * dim, dim);
        if (dj < bd) {
          bd = dj;
          best = static_cast<int>(j);
        }
      }
      assign[i] = best;
      dist[i] = bd;
    });
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) mse += dist[i];
    return mse / static_cast<double>(n);
  };

  LbgResult out;
  std::vector<double> sums(n_cells * dim);
  std::vector<std::size_t> counts(n_cells);
  std::vector<double> cell_dist(n_cells);
  double prev_mse = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    double mse = assignment_pass();

    std::fill(counts.begin(), counts.end(), 0);
    std::fill(cell_dist.begin(), cell_dist.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      cell_dist[assign[i]] += dist[i];
    }

    bool had_empty = false;
    for (std::size_t j = 0; j < n_cells; ++j) {
      if (counts[j] != 0) continue;
      had_empty = true;
      // split the highest-distortion cell: nudge a copy of its codepoint
      // toward its farthest member
      const std::size_t donor =
          std::max_element(cell_dist.begin(), cell_dist.end()) - cell_dist.begin();
      std::size_t far_i = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<std::size_t>(assign[i]) != donor) continue;
        if (dist[i] > far_d) {
          far_d = dist[i];
          far_i = i;
        }
      }
      const double radius = std::sqrt(std::max(far_d, 0.0));
      for (int c = 0; c < dim; ++c) {
        const double dirc = s[far_i * dim + c] - cb[donor * dim + c];
        const double norm = radius > 0.0 ? radius : 1.0;
        cb[j * dim + c] = cb[donor * dim + c] + 1e-6 * radius * (dirc / norm);
      }
      cell_dist[donor] *= 0.5;  // avoid re-splitting the same donor for every empty cell
    }
    if (had_empty) {
      mse = assignment_pass();  // extra codepoints only shrink distances
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[assign[i]];
    }

    out.mse_history.push_back(mse);
    out.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < dim; ++c) sums[assign[i] * dim + c] += s[i * dim + c];
    for (std::size_t j = 0; j < n_cells; ++j)
      if (counts[j] > 0)
        for (int c = 0; c < dim; ++c)
          cb[j * dim + c] = sums[j * dim + c] / static_cast<double>(counts[j]);

    if (mse == 0.0) break;
    if (std::isfinite(prev_mse) && prev_mse - mse < opts.tol * prev_mse) break;
    prev_mse = mse;
  }

  out.codebook.dim = dim;
  out.codebook.domain = domain;
  out.codebook.points = std::move(cb);
  // centroids of in-domain samples stay in the domain box; clamp roundoff
  for (std::size_t j = 0; j < n_cells; ++j)
    for (int c = 0; c < dim; ++c) {
      double& v = out.codebook.points[j * dim + c];
      v = std::min(std::max(v, domain.lo[c]), domain.hi[c]);
    }
  return out;
}

// ---- compander --------------------------------------------------------------

CompanderQuantizer compander_from_density(const DensityField& zeta, std::size_t n_cells) {
  if (zeta.grid.dim() != 1)
    throw std::invalid_argument("compander_from_density: scalar densities only");
  if (n_cells < 1) throw std::invalid_argument("compander_from_density: need N >= 1");
  const int nodes = zeta.grid.nodes(0);
  for (int i = 0; i < nodes; ++i)
    if (!(zeta.values[i] > 0.0))
      throw std::invalid_argument("compander_from_density: zeta must be strictly positive");

  const double h = zeta.grid.step(0);
  std::vector<double> phi(nodes, 0.0);
  for (int i = 1; i < nodes; ++i)
    phi[i] = phi[i - 1] + 0.5 * h * (zeta.values[i - 1] + zeta.values[i]);
  const double total = phi.back();
  for (double& v : phi) v /= total;

  std::vector<double> breaks(n_cells + 1);
  breaks[0] = zeta.grid.box().lo[0];
  breaks[n_cells] = zeta.grid.box().hi[0];
  int seg = 0;
  for (std::size_t j = 1; j < n_cells; ++j) {
    const double q = static_cast<double>(j) / static_cast<double>(n_cells);
    while (seg + 1 < nodes && phi[seg + 1] < q) ++seg;
    const double t = (q - phi[seg]) / (phi[seg + 1] - phi[seg]);
    breaks[j] = zeta.grid.coord(0, seg) + t * h;
  }
  std::vector<double> levels(n_cells);
  for (std::size_t j = 0; j < n_cells; ++j) levels[j] = 0.5 * (breaks[j] + breaks[j + 1]);
  return CompanderQuantizer(std::move(breaks), std::move(levels));
}

VoronoiQuantizer uniform_quantizer(const Box& domain, const std::vector<int>& per_axis) {
  const int d = domain.dim();
  if (static_cast<int>(per_axis.size()) != d)
    throw std::invalid_argument("uniform_quantizer: per_axis size mismatch");
  std::size_t n = 1;
  for (int c : per_axis) {
    if (c < 1) throw std::invalid_argument("uniform_quantizer: per_axis entries must be >= 1");
    n *= static_cast<std::size_t>(c);
  }
  Codebook cb;
  cb.dim = d;
  cb.domain = domain;
  cb.points.resize(n * d);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      const int i = static_cast<int>(rem % per_axis[a]);
      rem /= per_axis[a];
      const double w = (domain.hi[a] - domain.lo[a]) / per_axis[a];
      cb.points[flat * d + a] = domain.lo[a] + (i + 0.5) * w;
    }
  }
  return VoronoiQuantizer(std::move(cb), /*allow_single=*/true);
}

// ---- rejection sampling -----------------------------------------------------

RejectionResult rejection_sample(const DensityField& target, std::size_t n,
                                 std::uint64_t seed) {
  const double mass = target.integral();
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("rejection_sample: target not normalized on its box");
  const double peak = *std::max_element(target.values.begin(), target.values.end());
  if (!(peak > 0.0)) throw std::invalid_argument("rejection_sample: zero-mass target");
  const double bound = 1.05 * peak;
  const int d = target.grid.dim();
  const Box& box = target.grid.box();

  RejectionResult out;
  out.samples.resize(n * d);
  Rng rng(seed, {0x7e57});
  std::vector<double> y(d);
  std::size_t accepted = 0;
  std::uint64_t proposals = 0;
  while (accepted < n) {
    for (int a = 0; a < d; ++a) y[a] = rng.uniform(box.lo[a], box.hi[a]);
    const double u = rng.uniform();
    ++proposals;
    if (u * bound <= target.grid.interpolate(target.values, y)) {
      std::copy(y.begin(), y.end(), out.samples.begin() + accepted * d);
      ++accepted;
    }
  }
  out.acceptance_rate = static_cast<double>(n) / static_cast<double>(proposals);
  return out;
}

// ---- cell statistics --------------------------------------------------------

Matrix CellStats::covariation_matrix(std::size_t j) const {
  Matrix m(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) m(a, b) = covariation[(j * dim + a) * dim + b];
  return m;
}

CellStats cell_stats(const CellPartition& q, std::int64_t mc_points, std::uint64_t seed) {
  const std::size_t nc = q.num_cells();
  const int d = q.dim();
  if (mc_points < static_cast<std::int64_t>(10000 * nc))
    throw std::invalid_argument("cell_stats: need at least 10^4 * N sample points");

  const Box& box = q.domain();
  constexpr std::int64_t kBlock = 4096;
  const std::int64_t blocks = (mc_points + kBlock - 1) / kBlock;

  struct Acc {
    std::vector<std::int64_t> hits;
    std::vector<double> sum, sum2, lo, hi;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(blocks));

  parallel_for(blocks, [&](std::int64_t b) {
    Acc& a = acc[static_cast<std::size_t>(b)];
    a.hits.assign(nc, 0);
    a.sum.assign(nc * d, 0.0);
    a.sum2.assign(nc * d * d, 0.0);
    a.lo.assign(nc * d, std::numeric_limits<double>::infinity());
    a.hi.assign(nc * d, -std::numeric_limits<double>::infinity());
    Rng rng(seed, {0xce11, static_cast<std::uint64_t>(b)});
    std::vector<double> y(d);
    const std::int64_t count = std::min(kBlock, mc_points - b * kBlock);
    for (std::int64_t i = 0; i < count; ++i) {
      for (int c = 0; c < d; ++c) y[c] = rng.uniform(box.lo[c], box.hi[c]);
      const int j = q.cell_index(y.data());
      ++a.hits[j];
      for (int c = 0; c < d; ++c) {
        a.sum[j * d + c] += y[c];
        a.lo[j * d + c] = std::min(a.lo[j * d + c], y[c]);
        a.hi[j * d + c] = std::max(a.hi[j * d + c], y[c]);
      }
      for (int c1 = 0; c1 < d; ++c1)
        for (int c2 = 0; c2 < d; ++c2) a.sum2[(j * d + c1) * d + c2] += y[c1] * y[c2];
    }
  });

  CellStats st;
  st.num_cells = nc;
  st.dim = d;
  st.domain_volume = box.volume();
  st.hits.assign(nc, 0);
  st.volume.assign(nc, 0.0);
  st.zeta.assign(nc, 0.0);
  st.centroid.assign(nc * d, 0.0);
  st.covariation.assign(nc * d * d, 0.0);
  st.diameter.assign(nc, 0.0);

  std::vector<double> sum(nc * d, 0.0), sum2(nc * d * d, 0.0);
  std::vector<double> lo(nc * d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(nc * d, -std::numeric_limits<double>::infinity());
  for (const Acc& a : acc) {
    for (std::size_t j = 0; j < nc; ++j) st.hits[j] += a.hits[j];
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += a.sum[i];
      lo[i] = std::min(lo[i], a.lo[i]);
      hi[i] = std::max(hi[i], a.hi[i]);
    }
    for (std::size_t i = 0; i < sum2.size(); ++i) sum2[i] += a.sum2[i];
  }

  for (std::size_t j = 0; j < nc; ++j) {
    if (st.hits[j] == 0) {
      st.empty_cells.push_back(j);
      continue;
    }
    const double cnt = static_cast<double>(st.hits[j]);
    st.volume[j] = st.domain_volume * cnt / static_cast<double>(mc_points);
    st.zeta[j] = 1.0 / (static_cast<double>(nc) * st.volume[j]);
    for (int c = 0; c < d; ++c) st.centroid[j * d + c] = sum[j * d + c] / cnt;
    const double vpow = std::pow(st.volume[j], 2.0 / d);
    for (int c1 = 0; c1 < d; ++c1)
      for (int c2 = 0; c2 < d; ++c2) {
        const double m2 = sum2[(j * d + c1) * d + c2] / cnt -
                          st.centroid[j * d + c1] * st.centroid[j * d + c2];
        st.covariation[(j * d + c1) * d + c2] = m2 / vpow;
      }
    // symmetrize roundoff
    for (int c1 = 0; c1 < d; ++c1)
      for (int c2 = c1 + 1; c2 < d; ++c2) {
        const double m = 0.5 * (st.covariation[(j * d + c1) * d + c2] +
                                st.covariation[(j * d + c2) * d + c1]);
        st.covariation[(j * d + c1) * d + c2] = m;
        st.covariation[(j * d + c2) * d + c1] = m;
      }
    double diag = 0.0;
    for (int c = 0; c < d; ++c) {
      const double e = hi[j * d + c] - lo[j * d + c];
      diag += e * e;
    }
    st.diameter[j] = std::sqrt(diag);
  }
  return st;
}

// ---- design pipeline --------------------------------------------------------

LbgResult design_detection_quantizer(const ProcessModel& model, std::size_t n_cells, int k,
                                     int n_mc, std::size_t n_train, std::uint64_t seed) {
  const Box box = model.domain_box();
  std::vector<int> nodes(box.dim(), 101);
  const RegularGrid grid(box, nodes);

  const ScoreBundle bundle = estimate_Fbar(model, grid, k, n_mc, Rng(seed, {1}).next_u64());
  const DensityField p0 = marginal_density_field(model, Hypothesis::H0, grid);
  const DensityField qstar = target_density_qstar(p0, bundle.fbar);
  const RejectionResult train = rejection_sample(qstar, n_train, Rng(seed, {2}).next_u64());
  return lbg_train(train.samples, box.dim(), box, n_cells, Rng(seed, {3}).next_u64());
}

// ---- serialization ----------------------------------------------------------

void write_codebook_csv(std::ostream& os, const Codebook& cb) {
  os << "index";
  for (int a = 0; a < cb.dim; ++a) os << ",x" << (a + 1);
  os << "\n";
  for (std::size_t j = 0; j < cb.size(); ++j) {
    os << j;
    for (int a = 0; a < cb.dim; ++a) os << "," << format_double(cb.point(j)[a]);
    os << "\n";
  }
}

void write_codebook_csv_file(const std::string& path, const Codebook& cb) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_codebook_csv(f, cb);
}

Codebook read_codebook_csv_file(const std::string& path, const Box& domain) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty codebook file: " + path);
  Codebook cb;
  cb.domain = domain;
  cb.dim = domain.dim();
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');  // index column
    for (int a = 0; a < cb.dim; ++a) {
      if (!std::getline(ss, tok, ','))
        throw std::runtime_error("codebook row too short: " + path);
      cb.points.push_back(std::stod(tok));
    }
  }
  cb.validate(true);
  return cb;
}

}  // namespace npquant
