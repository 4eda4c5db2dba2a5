#include <doctest.h>

#include <cmath>

#include "npquant/highrate.hpp"
#include "npquant/numerics.hpp"
#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"
#include "oracles.hpp"

using namespace npquant;

TEST_CASE("nearest cell: tie rule, self-assignment, and the argmin property") {
  Codebook cb;
  cb.dim = 1;
  cb.domain = Box::cube(1, 2.0);
  cb.points = {-1.0, 1.0};
  const VoronoiQuantizer q(cb);
  const double zero = 0.0;
  CHECK(q.cell_index(&zero) == 0);  // equidistant, lowest index wins
  for (std::size_t j = 0; j < q.num_cells(); ++j)
    CHECK(q.cell_index(q.representative(j)) == static_cast<int>(j));

  Codebook cb2;
  cb2.dim = 2;
  cb2.domain = Box::cube(2, 3.0);
  Rng rng(5);
  for (int i = 0; i < 17; ++i) {
    cb2.points.push_back(rng.uniform(-3, 3));
    cb2.points.push_back(rng.uniform(-3, 3));
  }
  const VoronoiQuantizer q2(cb2);
  for (int t = 0; t < 10000; ++t) {
    const double y[2] = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const int j = q2.cell_index(y);
    auto d2 = [&](std::size_t c) {
      const double dx = y[0] - q2.representative(c)[0];
      const double dy = y[1] - q2.representative(c)[1];
      return dx * dx + dy * dy;
    };
    for (std::size_t c = 0; c < q2.num_cells(); ++c) {
      CHECK(d2(j) <= d2(c) + 1e-15);
      if (d2(c) == d2(j)) CHECK(j <= static_cast<int>(c));
    }
  }
  const double outside[2] = {5.0, 0.0};
  CHECK_THROWS_AS(q2.cell_index(outside), std::domain_error);
}

TEST_CASE("LBG finds well-separated cluster means") {
  Rng rng(12);
  std::vector<double> samples;
  for (int i = 0; i < 2000; ++i) {
    const double cx = i % 2 == 0 ? -5.0 : 5.0;
    samples.push_back(cx + 0.3 * rng.normal());
    samples.push_back(0.3 * rng.normal());
  }
  const LbgResult res = lbg_train(samples, 2, Box::cube(2, 8.0), 2, 3);
  REQUIRE(res.codebook.size() == 2);
  double lo_x = res.codebook.point(0)[0], hi_x = res.codebook.point(1)[0];
  if (lo_x > hi_x) std::swap(lo_x, hi_x);
  CHECK(std::abs(lo_x + 5.0) < 0.1);
  CHECK(std::abs(hi_x - 5.0) < 0.1);
  CHECK(std::abs(res.codebook.point(0)[1]) < 0.1);
  for (std::size_t i = 1; i < res.mse_history.size(); ++i)
    CHECK(res.mse_history[i] <= res.mse_history[i - 1] * (1 + 1e-12));
}

TEST_CASE("LBG with one cell per distinct sample reaches zero distortion") {
  std::vector<double> samples;
  Rng rng(9);
  for (int i = 0; i < 12; ++i) samples.push_back(rng.uniform(-1, 1));
  const LbgResult res = lbg_train(samples, 1, Box::cube(1, 1.0), 12, 4);
  CHECK(res.mse_history.back() == 0.0);
  std::vector<double> a = samples, b = res.codebook.points;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]));
}

TEST_CASE("LBG converged codebooks are near-fixed-points of one more sweep") {
  Rng rng(31);
  std::vector<double> samples;
  for (int i = 0; i < 4000; ++i) samples.push_back(rng.normal());
  const LbgResult res = lbg_train(samples, 1, Box::cube(1, 8.0), 8, 21);
  // one extra assignment + centroid sweep changes distortion below tolerance
  std::vector<double> cb = res.codebook.points;
  std::vector<double> sums(8, 0.0);
  std::vector<int> counts(8, 0);
  double mse = 0.0;
  for (double s : samples) {
    int best = 0;
    double bd = std::abs(s - cb[0]);
    for (int j = 1; j < 8; ++j)
      if (std::abs(s - cb[j]) < bd) {
        bd = std::abs(s - cb[j]);
        best = j;
      }
    sums[best] += s;
    counts[best] += 1;
    mse += bd * bd;
  }
  mse /= samples.size();
  CHECK(mse <= res.mse_history.back() * (1 + 1e-12));
  CHECK(mse >= res.mse_history.back() * (1 - 2e-6));
  CHECK_THROWS_AS(lbg_train(samples, 1, Box::cube(1, 8.0), 1000, 2),
                  std::invalid_argument);
}

TEST_CASE("trained point density tracks the Bennett profile of the target") {
  // scenario-1 design target: rank correlation between the empirical zeta of
  // an LBG codebook trained on q* and q*^(d/(d+2)) on occupied nodes
  const ProcessModel m(make_qpsk_oqpsk_hmm(3.0, 0.6));
  const RegularGrid grid(Box::cube(2, 3.0), {61, 61});
  const ScoreBundle bundle = estimate_Fbar(m, grid, 3, 400, 600);
  const DensityField p0 = marginal_density_field(m, Hypothesis::H0, grid);
  const DensityField qstar = target_density_qstar(p0, bundle.fbar);
  const RejectionResult train = rejection_sample(qstar, 20000, 601);
  const LbgResult lbg = lbg_train(train.samples, 2, Box::cube(2, 3.0), 128, 602);
  const VoronoiQuantizer q(lbg.codebook);
  const CellStats stats = cell_stats(q, 10000 * 128, 603);
  std::vector<double> zeta_emp, bennett;
  for (std::size_t i = 0; i < grid.total_nodes(); ++i) {
    const auto y = grid.node_point(i);
    const int j = q.cell_index(y.data());
    if (stats.hits[j] == 0) continue;
    if (qstar.values[i] <= 0.0) continue;
    zeta_emp.push_back(stats.zeta[j]);
    bennett.push_back(std::pow(qstar.values[i], 0.5));
  }
  CHECK(oracles::rank_correlation(zeta_emp, bennett) > 0.5);
}

TEST_CASE("detection-optimized and MSE-optimal codebooks differ") {
  const ProcessModel m(make_qpsk_oqpsk_hmm(3.0, 0.6));
  const Box box = Box::cube(2, 3.0);
  const LbgResult prop = design_detection_quantizer(m, 64, 3, 300, 6000, 900);
  std::vector<double> p0_samples(2 * 6000);
  {
    Rng rng(901);
    for (int i = 0; i < 6000; ++i) sample_marginal_h0(m, rng, &p0_samples[2 * i]);
  }
  const LbgResult mse = lbg_train(p0_samples, 2, box, 64, 902);
  const VoronoiQuantizer qp(prop.codebook);
  const VoronoiQuantizer qm(mse.codebook);
  const CellStats sp = cell_stats(qp, 10000 * 64, 903);
  const CellStats sm = cell_stats(qm, 10000 * 64, 904);
  // symmetric KL between the two empirical codepoint densities on the grid
  const RegularGrid grid(box, {41, 41});
  double sym_kl = 0.0;
  for (std::size_t i = 0; i < grid.total_nodes(); ++i) {
    const auto y = grid.node_point(i);
    const double zp = sp.zeta[qp.cell_index(y.data())];
    const double zm = sm.zeta[qm.cell_index(y.data())];
    if (zp > 0 && zm > 0)
      sym_kl += grid.quad_weight(i) * (zp - zm) * (std::log(zp) - std::log(zm));
  }
  CHECK(sym_kl > 0.05);
}

TEST_CASE("compander breakpoints follow the compressor") {
  // uniform density gives uniform cells
  DensityField flat;
  flat.grid = RegularGrid(Box::cube(1, 1.0), {101});
  flat.values.assign(101, 1.0);
  flat.normalize();
  const CompanderQuantizer u = compander_from_density(flat, 4);
  const auto b = u.interval_breakpoints();
  for (int j = 0; j <= 4; ++j) CHECK(b[j] == doctest::Approx(-1.0 + 0.5 * j).epsilon(1e-9));

  // zeta = 2t on [0,1]: the median of the compressor sits at 1/sqrt(2)
  DensityField ramp;
  Box unit;
  unit.lo = {0.0};
  unit.hi = {1.0};
  ramp.grid = RegularGrid(unit, {201});
  ramp.values.resize(201);
  for (int i = 0; i < 201; ++i) ramp.values[i] = 2.0 * ramp.grid.coord(0, i);
  ramp.values[0] = 1e-9;  // strictly positive requirement
  ramp.normalize();
  const CompanderQuantizer r = compander_from_density(ramp, 2);
  CHECK(r.interval_breakpoints()[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));

  DensityField bad = flat;
  bad.values[13] = 0.0;
  CHECK_THROWS_AS(compander_from_density(bad, 4), std::invalid_argument);
}

TEST_CASE("compander point density converges to its target") {
  // curved Lipschitz density on [-1, 1], known in closed form
  auto zeta_exact = [](double t) { return (2.0 + 1.8 * std::sin(4.0 * t)) / 4.0; };
  DensityField zeta;
  zeta.grid = RegularGrid(Box::cube(1, 1.0), {2001});
  zeta.values.resize(2001);
  for (int i = 0; i < 2001; ++i) zeta.values[i] = zeta_exact(zeta.grid.coord(0, i));
  zeta.normalize();
  auto sup_gap = [&](std::size_t n) {
    const CompanderQuantizer q = compander_from_density(zeta, n);
    const auto b = q.interval_breakpoints();
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double emp = 1.0 / (static_cast<double>(n) * (b[j + 1] - b[j]));
      const double mid = 0.5 * (b[j] + b[j + 1]);
      worst = std::max(worst, std::abs(emp - zeta_exact(mid)));
    }
    return worst;
  };
  CHECK(sup_gap(256) < 0.05);
  CHECK(sup_gap(256) <= 0.5 * sup_gap(64));
}

TEST_CASE("uniform quantizer lays out product-grid centers") {
  Box unit;
  unit.lo = {0.0};
  unit.hi = {1.0};
  const VoronoiQuantizer q = uniform_quantizer(unit, {4});
  const double want[4] = {0.125, 0.375, 0.625, 0.875};
  for (int j = 0; j < 4; ++j)
    CHECK(q.representative(j)[0] == doctest::Approx(want[j]).epsilon(1e-15));

  const VoronoiQuantizer q2 = uniform_quantizer(Box::cube(2, 8.0), {8, 8});
  CHECK(q2.num_cells() == 64);
  const CellStats st = cell_stats(q2, 10000 * 64, 7);
  for (std::size_t j = 0; j < 64; ++j) CHECK(st.volume[j] == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("rejection sampling: acceptance bound, analytic CDF match, determinism") {
  DensityField flat;
  flat.grid = RegularGrid(Box::cube(1, 1.0), {51});
  flat.values.assign(51, 1.0);
  flat.normalize();
  const RejectionResult u = rejection_sample(flat, 20000, 77);
  CHECK(u.acceptance_rate >= 0.95);

  // triangular density on [-1, 1]: f(t) = (1 - |t|), cdf analytic
  DensityField tri;
  tri.grid = RegularGrid(Box::cube(1, 1.0), {401});
  tri.values.resize(401);
  for (int i = 0; i < 401; ++i)
    tri.values[i] = 1.0 - std::abs(tri.grid.coord(0, i));
  tri.normalize();
  const RejectionResult t = rejection_sample(tri, 100000, 78);
  const double ks = oracles::ks_distance(t.samples, [](double x) {
    return x < 0 ? 0.5 * (1 + x) * (1 + x) : 1.0 - 0.5 * (1 - x) * (1 - x);
  });
  CHECK(ks < 0.01);

  const RejectionResult again = rejection_sample(tri, 100, 123);
  const RejectionResult again2 = rejection_sample(tri, 100, 123);
  CHECK(again.samples == again2.samples);

  DensityField zero = flat;
  for (double& v : zero.values) v = 0.0;
  CHECK_THROWS(rejection_sample(zero, 10, 1));
}

TEST_CASE("cell statistics reproduce interval and square moments") {
  const VoronoiQuantizer line = uniform_quantizer(Box::cube(1, 8.0), {8});
  const CellStats st1 = cell_stats(line, 10000 * 8, 11);
  for (std::size_t j = 0; j < 8; ++j)
    CHECK(st1.covariation[j] == doctest::Approx(1.0 / 12.0).epsilon(0.02));

  const VoronoiQuantizer square = uniform_quantizer(Box::cube(2, 8.0), {4, 4});
  const CellStats st2 = cell_stats(square, 10000 * 16, 12);
  for (std::size_t j = 0; j < 16; ++j) {
    const Matrix m = st2.covariation_matrix(j);
    CHECK(m(0, 0) == doctest::Approx(1.0 / 12.0).epsilon(0.03));
    CHECK(m(1, 1) == doctest::Approx(1.0 / 12.0).epsilon(0.03));
    CHECK(std::abs(m(0, 1)) < 0.01);
    CHECK(m(0, 1) == m(1, 0));
    const SymmetricEigen eig = symmetric_eigen(m);
    for (double lambda : eig.eigenvalues) CHECK(lambda >= -1e-12);
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < 16; ++j) mass += st2.zeta[j] * st2.volume[j];
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(cell_stats(square, 100, 1), std::invalid_argument);
}

TEST_CASE("design pipeline rejects identical hypotheses") {
  IidModel m;
  m.dim = 1;
  m.domain = Box::cube(1, 4.0);
  m.bounded = true;
  m.logpdf_h0 = [](const double* y) { return normal_logpdf(y[0], 0.0, 1.0); };
  m.logpdf_h1 = m.logpdf_h0;
  m.sample_h0 = [](Rng& rng, double* out) {
    do {
      out[0] = rng.normal();
    } while (std::abs(out[0]) > 4.0);
  };
  m.sample_h1 = m.sample_h0;
  m.grad_log_ratio = [](const double*, double* g) { g[0] = 0.0; };
  const ProcessModel model(std::move(m));
  CHECK_THROWS_AS(design_detection_quantizer(model, 8, 2, 50, 500, 3), std::domain_error);
}

TEST_CASE("codebooks round-trip through CSV") {
  Codebook cb;
  cb.dim = 2;
  cb.domain = Box::cube(2, 3.0);
  cb.points = {-1.25, 0.5, 2.0 / 3.0, -0.125, 1.0, 1.0};
  write_codebook_csv_file("/tmp/npq_cb_test.csv", cb);
  const Codebook back = read_codebook_csv_file("/tmp/npq_cb_test.csv", cb.domain);
  REQUIRE(back.points.size() == cb.points.size());
  for (std::size_t i = 0; i < cb.points.size(); ++i) CHECK(back.points[i] == cb.points[i]);
}
