#pragma once

#include <cstdint>
#include <vector>

#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"

namespace npquant {

// L_1..L_n, the log-likelihood ratio of every prefix of a window
struct LogLikelihoodPath {
  std::vector<double> values;

  double final() const { return values.back(); }
  std::size_t length() const { return values.size(); }
};

// log P[Y in C_j | X = x], state-major, with per-state pre-normalization
// deficits from the Monte-Carlo cell integration
struct CellLikelihoodTable {
  int num_states = 0;
  std::size_t num_cells = 0;
  std::vector<double> log_prob;  // [state * num_cells + cell]
  std::vector<double> deficit;   // per state, |1 - sum of raw masses|

  double max_deficit() const;
  bool deficit_warning() const { return max_deficit() > 0.01; }
};

enum class ExponentMethod { ergodic_average, exact_discrete };

struct ExponentEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::int64_t path_length = 0;
  std::int64_t conditioning_depth = 0;  // burn-in realizing the depth limit
  ExponentMethod method = ExponentMethod::ergodic_average;
};

// How Gauss-model quantized likelihoods are approximated: the latent state
// (AR1: the 2-D signal; MA: the last L innovations) lives on a per-axis grid
// of `grid_points` nodes, transitions carry Gaussian weights, and cell
// emission masses come from 1-D Gaussian interval masses (scalar cells) or
// Monte-Carlo cell integrals (2-D cells). Gauss-Hermite node placement is the
// default; a uniform grid over +-span_sd standard deviations with Gaussian
// midpoint weights needs several times more points for the same likelihood
// accuracy.
enum class LatentGridRule { gauss_hermite, uniform };

struct GaussQuantizedOptions {
  bool enable_approximation = true;
  int grid_points = 41;
  LatentGridRule rule = LatentGridRule::gauss_hermite;
  double span_sd = 5.0;              // uniform rule only
  int mc_emission = 4000;            // proposals per cell for 2-D emission integrals
  std::uint64_t emission_seed = 0x9a55;
};

double joint_log_density(const ProcessModel& model, Hypothesis hyp,
                         const ObservationWindow& window);

LogLikelihoodPath llr_path(const ProcessModel& model, const ObservationWindow& window);

// K estimated as -L_n/n on a path sampled under H0; batch-means errors
ExponentEstimate estimate_exponent_raw(const ProcessModel& model, std::int64_t n,
                                       std::uint64_t seed);

CellLikelihoodTable cell_likelihoods(const FiniteStateHmm& model, const CellPartition& q,
                                     int mc_per_cell, std::uint64_t seed);

// maps every sample to its cell; out-of-domain samples of unbounded models
// are clamped onto the truncation box first
std::vector<int> quantize_path(const CellPartition& q, const ObservationWindow& window);

LogLikelihoodPath quantized_llr_path(const ProcessModel& model, const CellPartition& q,
                                     const std::vector<int>& cells,
                                     const GaussQuantizedOptions& opts = {});

ExponentEstimate estimate_exponent_quantized(const ProcessModel& model, const CellPartition& q,
                                             std::int64_t n, std::uint64_t seed,
                                             const GaussQuantizedOptions& opts = {});

// K_N = sum_j P0[C_j] log(P0[C_j]/P1[C_j]) with cell masses by adaptive
// quadrature; scalar i.i.d. models only
ExponentEstimate exact_discrete_exponent(const ProcessModel& model, const CellPartition& q);

// Shared forward filter behind the Gauss-model quantized likelihoods; built
// once per (model, quantizer) and reused across paths.
class DiscretizedStateFilter {
 public:
  DiscretizedStateFilter(const GaussLinearModel& model, const CellPartition& q,
                         const GaussQuantizedOptions& opts = {});

  void llr_prefixes(const std::vector<int>& cells, std::vector<double>& out) const;

  double emission_deficit() const { return emission_deficit_; }

 private:
  void build_ma(const GaussLinearModel& model, const CellPartition& q);
  void build_ar1(const GaussLinearModel& model, const CellPartition& q);
  void unit_grid(std::vector<double>& nodes, std::vector<double>& weights) const;

  GaussLinearModel::Kind kind_;
  LatentGridRule rule_ = LatentGridRule::gauss_hermite;
  int points_ = 0;
  int state_dims_ = 0;  // MA: number of lagged innovations; AR1: 2
  std::size_t num_cells_ = 0;
  double span_ = 5.0;
  int mc_emission_ = 4000;
  std::uint64_t emission_seed_ = 0;
  std::vector<double> grid_;          // latent node coordinates, one axis
  std::vector<double> log_h0_mass_;   // per cell
  std::vector<double> weights_;       // innovation / stationary grid weights
  std::vector<double> emission_;      // MA: [cell][flat(i0..iL)]; AR1: [cell][re][im]
  std::vector<double> transition_;    // AR1 only, row-stochastic points x points
  double emission_deficit_ = 0.0;
};

}  // namespace npquant
