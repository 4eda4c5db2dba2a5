#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "npquant/grid.hpp"
#include "npquant/linalg.hpp"
#include "npquant/rng.hpp"

namespace npquant {

enum class Hypothesis : int { H0 = 0, H1 = 1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

// A window of consecutive d-dimensional samples; samples are stored flat,
// sample i occupying [i*dim, (i+1)*dim).
struct ObservationWindow {
  int first_index = 1;
  int dim = 0;
  std::vector<double> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  const double* sample(std::size_t i) const { return data.data() + i * dim; }
  double* sample(std::size_t i) { return data.data() + i * dim; }
};

// Finite-state hidden Markov model with Gaussian observation kernel truncated
// to the box [-M, M]^d (paper's QPSK/OQPSK setting and its generalizations).
struct FiniteStateHmm {
  int num_states = 0;
  int dim = 0;
  Matrix transition_h0, transition_h1;       // row-stochastic
  std::vector<double> initial_dist;          // stationary for both transitions
  std::vector<std::vector<double>> emission_centers;  // T(x), one d-vector per state
  double noise_sigma = 0.0;                  // per-component observation noise sd
  double truncation_m = 0.0;                 // observation domain [-M, M]^d

  // log of the per-state normalizer of the truncated Gaussian kernel,
  // computed once at construction by 64-node Gauss-Legendre per axis
  std::vector<double> log_normalizer;

  void validate_and_finalize();  // throws std::invalid_argument on bad input
  double log_kernel(int state, const double* y) const;  // log g(x, y), -inf off box
};

// Gauss-AR(1)-plus-noise (complex, d = 2) and scalar MA-plus-noise models.
//
// AR1 follows the circular complex convention: E|X_k|^2 = 1 and
// E|W_k|^2 = sigma^2, i.e. per real component the signal variance is 1/2 and
// the noise variance sigma^2/2; the two components are independent copies.
// MA is real-valued scalar: Y_k = sum_l h_l U_{k-l} + W_k with U, W unit- and
// sigma-sd Gaussians.
struct GaussLinearModel {
  enum class Kind { AR1, MA } kind = Kind::AR1;
  double ar_coefficient = 0.0;  // AR1 only, |a| < 1
  std::vector<double> ma_taps;  // MA only, h_0..h_L
  double noise_sigma = 0.0;
  int dim = 0;  // 2 for AR1, 1 for MA

  // half-width of the truncation box used by bounded-support operations;
  // 0 selects the default of 8 marginal standard deviations (under H0)
  double trunc_half_width = 0.0;

  void validate() const;
  double component_signal_variance() const;  // per real component
  double component_noise_variance() const;
  double h0_marginal_variance() const;  // per component, under H0
  double h1_marginal_variance() const;
  double effective_half_width() const;
  // autocovariance r(0..max_lag) of one observation component under hyp
  std::vector<double> component_autocov(Hypothesis hyp, int max_lag) const;
};

// Two-hypothesis i.i.d. model given by evaluable log-densities and samplers.
struct IidModel {
  int dim = 0;
  std::function<double(const double*)> logpdf_h0, logpdf_h1;
  std::function<void(Rng&, double*)> sample_h0, sample_h1;
  // optional analytic gradient of log p0 - log p1; finite differences
  // (step 1e-6) are used when absent
  std::function<void(const double*, double*)> grad_log_ratio;
  Box domain;
  bool bounded = true;
};

class ProcessModel {
 public:
  enum class Kind { Iid, Hmm, Gauss };

  explicit ProcessModel(IidModel m);
  explicit ProcessModel(FiniteStateHmm m);
  explicit ProcessModel(GaussLinearModel m);

  Kind kind() const { return kind_; }
  int dim() const;
  bool bounded_domain() const;
  Box domain_box() const;  // truncation box for unbounded models

  const IidModel& iid() const { return std::get<IidModel>(model_); }
  const FiniteStateHmm& hmm() const { return std::get<FiniteStateHmm>(model_); }
  const GaussLinearModel& gauss() const { return std::get<GaussLinearModel>(model_); }

 private:
  Kind kind_;
  std::variant<IidModel, FiniteStateHmm, GaussLinearModel> model_;
};

// ---- built-in models -------------------------------------------------------

// Scenario-1 QPSK vs OQPSK hidden Markov model on [-M, M]^2.
FiniteStateHmm make_qpsk_oqpsk_hmm(double truncation_m, double sigma);

// Scenario-2 white-vs-AR(1) complex Gaussian model.
GaussLinearModel make_ar_detect_model(double a, double sigma, double trunc_half_width = 0.0);

// Scenario-3 noise-vs-MA scalar model.
GaussLinearModel make_ma_detect_model(std::vector<double> taps, double sigma,
                                      double trunc_half_width = 0.0);

// scalar Gaussian pair restricted to [-half_width, half_width]
IidModel make_gaussian_pair_iid(double mean0, double sd0, double mean1, double sd1,
                                double half_width = 8.0);

// ---- operations ------------------------------------------------------------

ObservationWindow sample_path(const ProcessModel& model, Hypothesis hyp, std::int64_t n,
                              std::int64_t burn_in, std::uint64_t seed);

// one draw from the single-sample marginal under H0 (used for score fields)
void sample_marginal_h0(const ProcessModel& model, Rng& rng, double* out);

double observation_kernel(const FiniteStateHmm& model, int state, const double* y);

double marginal_logpdf(const ProcessModel& model, Hypothesis hyp, const double* y);

// Precomputes the side-window messages once so the gradient of
// log(p0/p1)(y_{-k:k}) w.r.t. the center sample can be evaluated cheaply at
// many center points. grad_log_ratio below and the score-field estimator both
// run through this.
class GradLogRatioEvaluator {
 public:
  GradLogRatioEvaluator(const ProcessModel& model, int k);

  // left and right hold k samples each, flat, adjacent to the center
  void set_side_window(const double* left, const double* right);
  void eval(const double* y0, double* grad_out) const;

  int k() const { return k_; }

 private:
  const ProcessModel* model_;
  int k_;
  // HMM: per-hypothesis forward/backward state weights at the center
  std::vector<double> state_weight_[2];
  // Gauss: per-hypothesis center row of the window-covariance inverse and the
  // per-component linear offset contributed by the side samples
  std::vector<double> center_row_[2];
  std::vector<double> side_offset_;  // per component, (row1-row0) . sides
  double center_coeff_ = 0.0;        // (row1-row0) at the center
};

std::vector<double> grad_log_ratio(const ProcessModel& model, const ObservationWindow& window,
                                   int k);

struct MixingReport {
  int m = 0;
  double sigma_minus = 0.0;
  double sigma_plus = 0.0;
};

// Finds the smallest m <= num_states^2 making every entry of both m-step
// transition matrices positive; throws std::domain_error for a chain that
// never mixes (reducible or periodic).
MixingReport validate_mixing(const FiniteStateHmm& model);

std::vector<double> stationary_distribution(const Matrix& transition, double tol = 1e-12);

}  // namespace npquant
