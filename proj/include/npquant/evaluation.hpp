#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npquant/highrate.hpp"
#include "npquant/likelihood.hpp"
#include "npquant/quantizers.hpp"

namespace npquant {

struct RocCurve {
  std::vector<double> pfa;   // ascending
  std::vector<double> pmiss; // nonincreasing along pfa
  std::int64_t trials_per_hypothesis = 0;
  std::int64_t path_length = 0;
  std::string label;

  // miss probability at a false-alarm level, interpolated along the curve
  double miss_at(double alpha) const;
};

// Empirical Neyman-Pearson trade-off of the quantized LLR detector: `trials`
// paths of length n per hypothesis, thresholds swept over the pooled LLR
// values.
RocCurve roc_curve(const ProcessModel& model, const CellPartition& q, std::int64_t n,
                   std::int64_t trials, std::uint64_t seed,
                   const GaussQuantizedOptions& opts = {}, std::string label = {});

double auc(const RocCurve& curve);

// one quantizer entering the D_e comparison; zeta comes from the supplied
// analytic field when given, otherwise from cell_stats + kernel smoothing
struct QuantizerSpec {
  const CellPartition* partition = nullptr;
  std::string label;
  const DensityField* analytic_zeta = nullptr;
};

struct ComparisonEntry {
  std::string label;
  std::size_t n_cells = 0;
  double de = 0.0;
  double de_bandwidth_low = 0.0;   // smoothing-bandwidth sensitivity (1 and 3
  double de_bandwidth_high = 0.0;  // grid steps); equal to de for analytic zeta
  std::optional<double> k_n_hat;
  std::optional<double> auc_value;
};

struct ComparisonReport {
  std::string model_descriptor;
  std::uint64_t seed = 0;
  double holder_bound = 0.0;
  std::vector<ComparisonEntry> entries;
};

struct ExponentLossOptions {
  int k = 3;
  int n_mc = 1000;
  std::int64_t mc_points_per_cell = 10000;  // cell_stats budget, times N
  double smoothing_bandwidth_steps = 2.0;
};

// D_e per quantizer on a common grid with M = I/12. zeta fields for trained
// codebooks are measured empirically; analytic densities are used as given.
ComparisonReport exponent_loss_table(const ProcessModel& model,
                                     const std::vector<QuantizerSpec>& quantizers,
                                     const RegularGrid& grid, std::uint64_t seed,
                                     const ExponentLossOptions& opts = {});

// piecewise-constant empirical point density 1/(N V_j) transferred to the
// grid and Gaussian-smoothed (bandwidth in grid steps), then normalized
DensityField empirical_zeta_field(const CellPartition& q, const CellStats& stats,
                                  const RegularGrid& grid, double bandwidth_steps = 2.0);

struct ConvergenceRow {
  int n_cells = 0;
  double k_raw = 0.0;
  double k_n = 0.0;
  double gap = 0.0;         // K - K_N
  double scaled_gap = 0.0;  // N^2 (K - K_N)
  double de = 0.0;          // D_e at the quantizer's point density
};

// Theorem-2 desk check for scalar i.i.d. models with uniform quantizers:
// N^2 (K - K_N) against D_e.
std::vector<ConvergenceRow> convergence_diagnostic(const ProcessModel& model,
                                                   const std::vector<int>& cell_counts,
                                                   int grid_nodes = 1001);

// Preflight for the Scenario-3 discretized-state filter: max |LLR| error over
// every length-3 quantized word against exhaustive Gaussian quadrature.
double ma_filter_preflight_error(const GaussLinearModel& model, const CellPartition& q,
                                 const GaussQuantizedOptions& opts = {});

void write_roc_csv_file(const std::string& path, const RocCurve& curve);

}  // namespace npquant
