#include "npquant/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "npquant/numerics.hpp"

namespace npquant {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_row_stochastic(const Matrix& m, const char* name) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) < 0.0) throw std::invalid_argument(std::string(name) + ": negative entry");
      s += m(i, j);
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument(std::string(name) + ": row does not sum to 1");
  }
}

void check_stationary(const std::vector<double>& pi, const Matrix& q, const char* name) {
  const std::size_t n = pi.size();
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += pi[i] * q(i, j);
    if (std::abs(s - pi[j]) > 1e-10)
      throw std::invalid_argument(std::string(name) + ": initial_dist not stationary");
  }
}

int draw_categorical(Rng& rng, const double* p, int n) {
  double u = rng.uniform();
  for (int i = 0; i < n - 1; ++i) {
    u -= p[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

int transition_row_draw(Rng& rng, const Matrix& q, int state) {
  double u = rng.uniform();
  const int n = static_cast<int>(q.cols());
  for (int j = 0; j < n - 1; ++j) {
    u -= q(state, j);
    if (u < 0.0) return j;
  }
  return n - 1;
}

// Gaussian emission truncated to the box, drawn by rejection
void draw_truncated_emission(Rng& rng, const FiniteStateHmm& m, int state, double* out) {
  const auto& c = m.emission_centers[state];
  for (;;) {
    bool ok = true;
    for (int i = 0; i < m.dim; ++i) {
      out[i] = c[i] + m.noise_sigma * rng.normal();
      if (std::abs(out[i]) > m.truncation_m) ok = false;
    }
    if (ok) return;
  }
}

Matrix toeplitz_from_autocov(const std::vector<double>& r, int n) {
  Matrix s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int lag = std::abs(i - j);
      s(i, j) = lag < static_cast<int>(r.size()) ? r[lag] : 0.0;
    }
  return s;
}

}  // namespace

// ---- FiniteStateHmm ---------------------------------------------------------

void FiniteStateHmm::validate_and_finalize() {
  if (num_states < 1) throw std::invalid_argument("FiniteStateHmm: num_states < 1");
  if (dim < 1) throw std::invalid_argument("FiniteStateHmm: dim < 1");
  if (noise_sigma <= 0.0) throw std::invalid_argument("FiniteStateHmm: sigma must be positive");
  if (truncation_m <= 0.0) throw std::invalid_argument("FiniteStateHmm: M must be positive");
  if (static_cast<int>(emission_centers.size()) != num_states)
    throw std::invalid_argument("FiniteStateHmm: emission center count mismatch");
  for (const auto& c : emission_centers)
    if (static_cast<int>(c.size()) != dim)
      throw std::invalid_argument("FiniteStateHmm: emission center dimension mismatch");
  check_row_stochastic(transition_h0, "transition_h0");
  check_row_stochastic(transition_h1, "transition_h1");
  if (static_cast<int>(initial_dist.size()) != num_states)
    throw std::invalid_argument("FiniteStateHmm: initial_dist size mismatch");
  double s = 0.0;
  for (double p : initial_dist) s += p;
  if (std::abs(s - 1.0) > 1e-12)
    throw std::invalid_argument("FiniteStateHmm: initial_dist does not sum to 1");
  check_stationary(initial_dist, transition_h0, "transition_h0");
  check_stationary(initial_dist, transition_h1, "transition_h1");

  static const QuadRule rule = gauss_legendre(64);
  log_normalizer.assign(num_states, 0.0);
  for (int x = 0; x < num_states; ++x) {
    double log_c = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double center = emission_centers[x][i];
      const double axis = gl_integrate(
          [&](double t) {
            const double z = (t - center) / noise_sigma;
            return std::exp(-0.5 * z * z);
          },
          -truncation_m, truncation_m, rule);
      log_c += std::log(axis);
    }
    log_normalizer[x] = log_c;
  }
}

double FiniteStateHmm::log_kernel(int state, const double* y) const {
  double q = 0.0;
  for (int i = 0; i < dim; ++i) {
    if (std::abs(y[i]) > truncation_m) return -kInf;
    const double z = (y[i] - emission_centers[state][i]) / noise_sigma;
    q += z * z;
  }
  return -0.5 * q - log_normalizer[state];
}

double observation_kernel(const FiniteStateHmm& model, int state, const double* y) {
  if (state < 0 || state >= model.num_states)
    throw std::out_of_range("observation_kernel: state out of range");
  const double lg = model.log_kernel(state, y);
  return lg == -kInf ? 0.0 : std::exp(lg);
}

// ---- GaussLinearModel -------------------------------------------------------

void GaussLinearModel::validate() const {
  if (noise_sigma <= 0.0) throw std::invalid_argument("GaussLinearModel: sigma must be positive");
  if (kind == Kind::AR1) {
    if (!(std::abs(ar_coefficient) < 1.0))
      throw std::invalid_argument("GaussLinearModel: |a| must be < 1");
    if (dim != 2) throw std::invalid_argument("GaussLinearModel: AR1 model has dim 2");
  } else {
    if (ma_taps.empty()) throw std::invalid_argument("GaussLinearModel: MA taps empty");
    for (double h : ma_taps)
      if (!std::isfinite(h)) throw std::invalid_argument("GaussLinearModel: MA tap not finite");
    if (dim != 1) throw std::invalid_argument("GaussLinearModel: MA model has dim 1");
  }
}

double GaussLinearModel::component_signal_variance() const {
  if (kind == Kind::AR1) return 0.5;  // E|X|^2 = 1 split over two components
  double s = 0.0;
  for (double h : ma_taps) s += h * h;
  return s;
}

double GaussLinearModel::component_noise_variance() const {
  return kind == Kind::AR1 ? 0.5 * noise_sigma * noise_sigma : noise_sigma * noise_sigma;
}

double GaussLinearModel::h0_marginal_variance() const {
  // H0 is signal-free for MA; white signal plus noise for AR1
  return kind == Kind::AR1 ? component_signal_variance() + component_noise_variance()
                           : component_noise_variance();
}

double GaussLinearModel::h1_marginal_variance() const {
  return component_signal_variance() + component_noise_variance();
}

double GaussLinearModel::effective_half_width() const {
  return trunc_half_width > 0.0 ? trunc_half_width : 8.0 * std::sqrt(h0_marginal_variance());
}

std::vector<double> GaussLinearModel::component_autocov(Hypothesis hyp, int max_lag) const {
  std::vector<double> r(max_lag + 1, 0.0);
  if (hyp == Hypothesis::H0) {
    r[0] = h0_marginal_variance();
    return r;
  }
  if (kind == Kind::AR1) {
    const double vx = component_signal_variance();
    for (int t = 0; t <= max_lag; ++t) r[t] = vx * std::pow(ar_coefficient, t);
    r[0] += component_noise_variance();
  } else {
    const int l = static_cast<int>(ma_taps.size()) - 1;
    for (int t = 0; t <= std::min(max_lag, l); ++t)
      for (int j = 0; j + t <= l; ++j) r[t] += ma_taps[j] * ma_taps[j + t];
    r[0] += component_noise_variance();
  }
  return r;
}

// ---- ProcessModel -----------------------------------------------------------

ProcessModel::ProcessModel(IidModel m) : kind_(Kind::Iid), model_(std::move(m)) {
  const auto& im = iid();
  if (im.dim < 1) throw std::invalid_argument("IidModel: dim < 1");
  if (!im.logpdf_h0 || !im.logpdf_h1 || !im.sample_h0 || !im.sample_h1)
    throw std::invalid_argument("IidModel: densities and samplers are required");
}

ProcessModel::ProcessModel(FiniteStateHmm m) : kind_(Kind::Hmm), model_(std::move(m)) {
  auto& h = std::get<FiniteStateHmm>(model_);
  if (h.log_normalizer.empty()) h.validate_and_finalize();
}

ProcessModel::ProcessModel(GaussLinearModel m) : kind_(Kind::Gauss), model_(std::move(m)) {
  gauss().validate();
}

int ProcessModel::dim() const {
  switch (kind_) {
    case Kind::Iid: return iid().dim;
    case Kind::Hmm: return hmm().dim;
    default: return gauss().dim;
  }
}

bool ProcessModel::bounded_domain() const {
  switch (kind_) {
    case Kind::Iid: return iid().bounded;
    case Kind::Hmm: return true;
    default: return false;
  }
}

Box ProcessModel::domain_box() const {
  switch (kind_) {
    case Kind::Iid: return iid().domain;
    case Kind::Hmm: return Box::cube(hmm().dim, hmm().truncation_m);
    default: return Box::cube(gauss().dim, gauss().effective_half_width());
  }
}

// ---- built-ins --------------------------------------------------------------

FiniteStateHmm make_qpsk_oqpsk_hmm(double truncation_m, double sigma) {
  FiniteStateHmm m;
  m.num_states = 4;
  m.dim = 2;
  m.noise_sigma = sigma;
  m.truncation_m = truncation_m;
  m.emission_centers = {{-1.0, -1.0}, {-1.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}};
  m.transition_h0 = Matrix(4, 4, 0.25);
  const double t = 1.0 / 3.0;
  m.transition_h1 = Matrix(4, 4, 0.0);
  const double q[4][4] = {{t, t, 0, t}, {t, t, t, 0}, {0, t, t, t}, {t, 0, t, t}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m.transition_h1(i, j) = q[i][j];
  m.initial_dist = stationary_distribution(m.transition_h1);
  m.validate_and_finalize();
  return m;
}

GaussLinearModel make_ar_detect_model(double a, double sigma, double trunc_half_width) {
  GaussLinearModel m;
  m.kind = GaussLinearModel::Kind::AR1;
  m.ar_coefficient = a;
  m.noise_sigma = sigma;
  m.dim = 2;
  m.trunc_half_width = trunc_half_width;
  m.validate();
  return m;
}

GaussLinearModel make_ma_detect_model(std::vector<double> taps, double sigma,
                                      double trunc_half_width) {
  GaussLinearModel m;
  m.kind = GaussLinearModel::Kind::MA;
  m.ma_taps = std::move(taps);
  m.noise_sigma = sigma;
  m.dim = 1;
  m.trunc_half_width = trunc_half_width;
  m.validate();
  return m;
}

IidModel make_gaussian_pair_iid(double mean0, double sd0, double mean1, double sd1,
                                double half_width) {
  IidModel m;
  m.dim = 1;
  m.domain = Box::cube(1, half_width);
  m.bounded = true;
  m.logpdf_h0 = [mean0, sd0](const double* y) { return normal_logpdf(y[0], mean0, sd0); };
  m.logpdf_h1 = [mean1, sd1](const double* y) { return normal_logpdf(y[0], mean1, sd1); };
  m.sample_h0 = [mean0, sd0, half_width](Rng& rng, double* out) {
    do {
      out[0] = mean0 + sd0 * rng.normal();
    } while (std::abs(out[0]) > half_width);
  };
  m.sample_h1 = [mean1, sd1, half_width](Rng& rng, double* out) {
    do {
      out[0] = mean1 + sd1 * rng.normal();
    } while (std::abs(out[0]) > half_width);
  };
  m.grad_log_ratio = [mean0, sd0, mean1, sd1](const double* y, double* g) {
    g[0] = -(y[0] - mean0) / (sd0 * sd0) + (y[0] - mean1) / (sd1 * sd1);
  };
  for (auto* lp : {&m.logpdf_h0, &m.logpdf_h1}) {
    const double mass = adaptive_integrate(
        [&](double t) { return std::exp((*lp)(&t)); }, -half_width, half_width, 1e-13);
    if (std::abs(mass - 1.0) > 1e-6)
      throw std::invalid_argument("make_gaussian_pair_iid: density mass off by >1e-6 on the box");
  }
  return m;
}

// ---- sampling ---------------------------------------------------------------

ObservationWindow sample_path(const ProcessModel& model, Hypothesis hyp, std::int64_t n,
                              std::int64_t burn_in, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_path: n must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("sample_path: burn_in must be >= 0");
  Rng rng(seed, {static_cast<std::uint64_t>(hyp)});
  ObservationWindow w;
  w.first_index = 1;
  w.dim = model.dim();
  w.data.resize(static_cast<std::size_t>(n) * w.dim);

  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& m = model.iid();
      const auto& draw = hyp == Hypothesis::H0 ? m.sample_h0 : m.sample_h1;
      std::vector<double> tmp(m.dim);
      for (std::int64_t k = 0; k < burn_in; ++k) draw(rng, tmp.data());
      for (std::int64_t k = 0; k < n; ++k) draw(rng, w.sample(k));
      break;
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model.hmm();
      const Matrix& q = hyp == Hypothesis::H0 ? m.transition_h0 : m.transition_h1;
      int state = draw_categorical(rng, m.initial_dist.data(), m.num_states);
      std::vector<double> tmp(m.dim);
      for (std::int64_t k = 0; k < burn_in; ++k) {
        draw_truncated_emission(rng, m, state, tmp.data());
        state = transition_row_draw(rng, q, state);
      }
      for (std::int64_t k = 0; k < n; ++k) {
        draw_truncated_emission(rng, m, state, w.sample(k));
        if (k + 1 < n) state = transition_row_draw(rng, q, state);
      }
      break;
    }
    case ProcessModel::Kind::Gauss: {
      const auto& m = model.gauss();
      const double sw = std::sqrt(m.component_noise_variance());
      if (m.kind == GaussLinearModel::Kind::AR1) {
        const double vx = m.component_signal_variance();
        const double sx = std::sqrt(vx);
        const double a = m.ar_coefficient;
        const double si = std::sqrt((1.0 - a * a) * vx);
        double x[2] = {sx * rng.normal(), sx * rng.normal()};
        auto step = [&](double* out) {
          for (int c = 0; c < 2; ++c) {
            if (hyp == Hypothesis::H1)
              x[c] = a * x[c] + si * rng.normal();
            else
              x[c] = sx * rng.normal();
            if (out) out[c] = x[c] + sw * rng.normal();
          }
        };
        for (std::int64_t k = 0; k < burn_in; ++k) step(nullptr);
        for (std::int64_t k = 0; k < n; ++k) step(w.sample(k));
      } else {
        const int l = static_cast<int>(m.ma_taps.size()) - 1;
        std::vector<double> u(l + 1, 0.0);  // u[0] newest
        for (int i = 0; i <= l; ++i) u[i] = rng.normal();
        auto step = [&](double* out) {
          for (int i = l; i > 0; --i) u[i] = u[i - 1];
          u[0] = rng.normal();
          double y = sw * rng.normal();
          if (hyp == Hypothesis::H1)
            for (int i = 0; i <= l; ++i) y += m.ma_taps[i] * u[i];
          if (out) out[0] = y;
        };
        for (std::int64_t k = 0; k < burn_in; ++k) step(nullptr);
        for (std::int64_t k = 0; k < n; ++k) step(w.sample(k));
      }
      break;
    }
  }
  return w;
}

void sample_marginal_h0(const ProcessModel& model, Rng& rng, double* out) {
  switch (model.kind()) {
    case ProcessModel::Kind::Iid:
      model.iid().sample_h0(rng, out);
      return;
    case ProcessModel::Kind::Hmm: {
      const auto& m = model.hmm();
      const int state = draw_categorical(rng, m.initial_dist.data(), m.num_states);
      draw_truncated_emission(rng, m, state, out);
      return;
    }
    case ProcessModel::Kind::Gauss: {
      const auto& m = model.gauss();
      const double sd = std::sqrt(m.h0_marginal_variance());
      for (int i = 0; i < m.dim; ++i) out[i] = sd * rng.normal();
      return;
    }
  }
}

// ---- marginals --------------------------------------------------------------

double marginal_logpdf(const ProcessModel& model, Hypothesis hyp, const double* y) {
  switch (model.kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& m = model.iid();
      if (m.bounded) {
        std::vector<double> v(y, y + m.dim);
        if (!m.domain.contains(v))
          throw std::domain_error("marginal_logpdf: point outside domain");
      }
      return hyp == Hypothesis::H0 ? m.logpdf_h0(y) : m.logpdf_h1(y);
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model.hmm();
      std::vector<double> terms(m.num_states);
      for (int x = 0; x < m.num_states; ++x)
        terms[x] = std::log(m.initial_dist[x]) + m.log_kernel(x, y);
      const double lp = log_sum_exp(terms.data(), terms.size());
      if (lp == -kInf) throw std::domain_error("marginal_logpdf: point outside domain");
      return lp;
    }
    default: {
      const auto& m = model.gauss();
      const double var =
          hyp == Hypothesis::H0 ? m.h0_marginal_variance() : m.h1_marginal_variance();
      const double sd = std::sqrt(var);
      double lp = 0.0;
      for (int i = 0; i < m.dim; ++i) lp += normal_logpdf(y[i], 0.0, sd);
      return lp;
    }
  }
}

// ---- gradient of the log ratio ----------------------------------------------

GradLogRatioEvaluator::GradLogRatioEvaluator(const ProcessModel& model, int k)
    : model_(&model), k_(k) {
  if (k < 0) throw std::invalid_argument("GradLogRatioEvaluator: k must be >= 0");
  if (model.kind() == ProcessModel::Kind::Gauss) {
    const auto& m = model.gauss();
    const int n = 2 * k + 1;
    for (int h = 0; h < 2; ++h) {
      const auto r = m.component_autocov(static_cast<Hypothesis>(h), n - 1);
      center_row_[h] = spd_inverse_row(toeplitz_from_autocov(r, n), k);
    }
    center_coeff_ = center_row_[1][k] - center_row_[0][k];
    side_offset_.assign(m.dim, 0.0);
  } else if (model.kind() == ProcessModel::Kind::Hmm) {
    const auto& m = model.hmm();
    for (auto& v : state_weight_) v.assign(m.num_states, 1.0 / m.num_states);
    if (k == 0)
      for (auto& v : state_weight_) v = m.initial_dist;
  }
}

void GradLogRatioEvaluator::set_side_window(const double* left, const double* right) {
  switch (model_->kind()) {
    case ProcessModel::Kind::Iid:
      return;
    case ProcessModel::Kind::Gauss: {
      const auto& m = model_->gauss();
      for (int c = 0; c < m.dim; ++c) {
        double s = 0.0;
        for (int j = 0; j < k_; ++j) {
          const double wl = center_row_[1][j] - center_row_[0][j];
          const double wr = center_row_[1][k_ + 1 + j] - center_row_[0][k_ + 1 + j];
          s += wl * left[j * m.dim + c] + wr * right[j * m.dim + c];
        }
        side_offset_[c] = s;
      }
      return;
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model_->hmm();
      const int ns = m.num_states;
      std::vector<double> cur(ns), nxt(ns);
      for (int h = 0; h < 2; ++h) {
        const Matrix& q = h == 0 ? m.transition_h0 : m.transition_h1;
        auto& w = state_weight_[h];
        if (k_ == 0) {
          w = m.initial_dist;
          continue;
        }
        // forward over the left window, then one transition into the center
        for (int x = 0; x < ns; ++x)
          cur[x] = m.initial_dist[x] * observation_kernel(m, x, left);
        for (int j = 1; j < k_; ++j) {
          const double* y = left + static_cast<std::size_t>(j) * m.dim;
          for (int x2 = 0; x2 < ns; ++x2) {
            double s = 0.0;
            for (int x1 = 0; x1 < ns; ++x1) s += cur[x1] * q(x1, x2);
            nxt[x2] = s * observation_kernel(m, x2, y);
          }
          std::swap(cur, nxt);
          double tot = 0.0;
          for (double v : cur) tot += v;
          for (double& v : cur) v /= tot;
        }
        std::vector<double> alpha(ns);
        for (int x0 = 0; x0 < ns; ++x0) {
          double s = 0.0;
          for (int x1 = 0; x1 < ns; ++x1) s += cur[x1] * q(x1, x0);
          alpha[x0] = s;
        }
        // backward over the right window
        std::vector<double> beta(ns, 1.0), bnxt(ns);
        for (int j = k_ - 1; j >= 0; --j) {
          const double* y = right + static_cast<std::size_t>(j) * m.dim;
          for (int x0 = 0; x0 < ns; ++x0) {
            double s = 0.0;
            for (int x1 = 0; x1 < ns; ++x1)
              s += q(x0, x1) * observation_kernel(m, x1, y) * beta[x1];
            bnxt[x0] = s;
          }
          std::swap(beta, bnxt);
          double tot = 0.0;
          for (double v : beta) tot += v;
          for (double& v : beta) v /= tot;
        }
        double tot = 0.0;
        for (int x = 0; x < ns; ++x) {
          w[x] = alpha[x] * beta[x];
          tot += w[x];
        }
        for (double& v : w) v /= tot;
      }
      return;
    }
  }
}

void GradLogRatioEvaluator::eval(const double* y0, double* grad_out) const {
  switch (model_->kind()) {
    case ProcessModel::Kind::Iid: {
      const auto& m = model_->iid();
      if (m.grad_log_ratio) {
        m.grad_log_ratio(y0, grad_out);
        return;
      }
      const double step = 1e-6;
      std::vector<double> p(y0, y0 + m.dim);
      for (int i = 0; i < m.dim; ++i) {
        const double orig = p[i];
        p[i] = orig + step;
        const double up = m.logpdf_h0(p.data()) - m.logpdf_h1(p.data());
        p[i] = orig - step;
        const double dn = m.logpdf_h0(p.data()) - m.logpdf_h1(p.data());
        p[i] = orig;
        grad_out[i] = (up - dn) / (2.0 * step);
      }
      return;
    }
    case ProcessModel::Kind::Gauss: {
      const auto& m = model_->gauss();
      for (int c = 0; c < m.dim; ++c)
        grad_out[c] = center_coeff_ * y0[c] + side_offset_[c];
      return;
    }
    case ProcessModel::Kind::Hmm: {
      const auto& m = model_->hmm();
      const double inv_var = 1.0 / (m.noise_sigma * m.noise_sigma);
      double ratio[2][8];  // dim <= 8 is ample here
      for (int h = 0; h < 2; ++h) {
        double den = 0.0;
        std::vector<double> num(m.dim, 0.0);
        for (int x = 0; x < m.num_states; ++x) {
          const double wg = state_weight_[h][x] * observation_kernel(m, x, y0);
          den += wg;
          for (int i = 0; i < m.dim; ++i) num[i] += wg * m.emission_centers[x][i];
        }
        if (den <= 0.0) throw std::domain_error("grad_log_ratio: point outside domain");
        for (int i = 0; i < m.dim; ++i) ratio[h][i] = num[i] / den;
      }
      for (int i = 0; i < m.dim; ++i)
        grad_out[i] = inv_var * (ratio[0][i] - ratio[1][i]);
      return;
    }
  }
}

std::vector<double> grad_log_ratio(const ProcessModel& model, const ObservationWindow& window,
                                   int k) {
  if (window.first_index != -k || static_cast<int>(window.size()) != 2 * k + 1)
    throw std::invalid_argument("grad_log_ratio: window must span indices -k..k");
  GradLogRatioEvaluator ev(model, k);
  ev.set_side_window(window.sample(0), window.sample(k + 1));
  std::vector<double> g(model.dim());
  ev.eval(window.sample(k), g.data());
  return g;
}

// ---- mixing -----------------------------------------------------------------

MixingReport validate_mixing(const FiniteStateHmm& model) {
  const int n = model.num_states;
  Matrix p0 = model.transition_h0, p1 = model.transition_h1;
  for (int m = 1; m <= n * n; ++m) {
    double lo = kInf, hi = -kInf;
    for (const Matrix* q : {&p0, &p1})
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          lo = std::min(lo, (*q)(i, j));
          hi = std::max(hi, (*q)(i, j));
        }
    if (lo > 0.0) return {m, lo, hi};
    p0 = p0 * model.transition_h0;
    p1 = p1 * model.transition_h1;
  }
  throw std::domain_error(
      "validate_mixing: no m <= num_states^2 makes both m-step kernels positive; "
      "chain is not irreducible aperiodic");
}

std::vector<double> stationary_distribution(const Matrix& transition, double tol) {
  const std::size_t n = transition.rows();
  std::vector<double> pi(n, 1.0 / n), nxt(n);
  for (int iter = 0; iter < 200000; ++iter) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += pi[i] * transition(i, j);
      nxt[j] = s;
    }
    double delta = 0.0, tot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      delta = std::max(delta, std::abs(nxt[j] - pi[j]));
      tot += nxt[j];
    }
    for (std::size_t j = 0; j < n; ++j) pi[j] = nxt[j] / tot;
    if (delta < tol) return pi;
  }
  throw std::runtime_error("stationary_distribution: power iteration did not converge");
}

}  // namespace npquant
