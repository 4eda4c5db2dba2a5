#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "npquant/grid.hpp"
#include "npquant/rng.hpp"

namespace npquant {

class ProcessModel;

struct Codebook {
  int dim = 0;
  Box domain;
  std::vector<double> points;  // N * dim, flat

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  const double* point(std::size_t j) const { return points.data() + j * dim; }
  double* point(std::size_t j) { return points.data() + j * dim; }

  // pairwise-distinct points inside the domain; N >= 2 unless allow_single
  void validate(bool allow_single = false) const;
};

// An N-cell partition of the domain with a deterministic cell map.
class CellPartition {
 public:
  virtual ~CellPartition() = default;
  virtual int dim() const = 0;
  virtual std::size_t num_cells() const = 0;
  virtual const Box& domain() const = 0;
  // lowest-index tie rule; throws std::domain_error off the domain
  virtual int cell_index(const double* y) const = 0;
  virtual const double* representative(std::size_t j) const = 0;
  // strictly increasing cell edges for scalar interval partitions;
  // throws std::logic_error when the partition is not one
  virtual std::vector<double> interval_breakpoints() const;
};

class VoronoiQuantizer : public CellPartition {
 public:
  explicit VoronoiQuantizer(Codebook codebook, bool allow_single = false);

  int dim() const override { return codebook_.dim; }
  std::size_t num_cells() const override { return codebook_.size(); }
  const Box& domain() const override { return codebook_.domain; }
  int cell_index(const double* y) const override;
  const double* representative(std::size_t j) const override { return codebook_.point(j); }
  std::vector<double> interval_breakpoints() const override;

  const Codebook& codebook() const { return codebook_; }

 private:
  Codebook codebook_;
};

// Scalar quantizer given by explicit breakpoints; levels are cell centroids.
class CompanderQuantizer : public CellPartition {
 public:
  CompanderQuantizer(std::vector<double> breakpoints, std::vector<double> levels);

  int dim() const override { return 1; }
  std::size_t num_cells() const override { return levels_.size(); }
  const Box& domain() const override { return domain_; }
  int cell_index(const double* y) const override;
  const double* representative(std::size_t j) const override { return &levels_[j]; }
  std::vector<double> interval_breakpoints() const override { return breakpoints_; }

 private:
  std::vector<double> breakpoints_;  // N + 1, strictly increasing
  std::vector<double> levels_;       // N
  Box domain_;
};

int nearest_cell(const CellPartition& q, const double* y);

struct LbgOptions {
  double tol = 1e-6;
  int max_iter = 200;
};

struct LbgResult {
  Codebook codebook;
  std::vector<double> mse_history;  // nonincreasing, one entry per iteration
  int iterations = 0;
};

// Classic LBG / Lloyd training: nearest-codepoint assignment alternating with
// centroid moves, random distinct sample subset as the initial codebook, empty
// cells repopulated by splitting the highest-distortion cell.
LbgResult lbg_train(const std::vector<double>& samples, int dim, const Box& domain,
                    std::size_t n_cells, std::uint64_t seed, const LbgOptions& opts = {});

// Scalar compander: compressor = primitive of zeta, breakpoints at the
// preimages of {0, 1/N, ..., 1}, levels at interval midpoints.
CompanderQuantizer compander_from_density(const DensityField& zeta, std::size_t n_cells);

VoronoiQuantizer uniform_quantizer(const Box& domain, const std::vector<int>& per_axis);

struct RejectionResult {
  std::vector<double> samples;  // n * dim, flat
  double acceptance_rate = 0.0;
};

// i.i.d. draws from a gridded density via uniform proposals on its box,
// bound 1.05 x max node value, multilinear interpolation between nodes
RejectionResult rejection_sample(const DensityField& target, std::size_t n,
                                 std::uint64_t seed);

struct CellStats {
  std::size_t num_cells = 0;
  int dim = 0;
  double domain_volume = 0.0;
  std::vector<std::int64_t> hits;
  std::vector<double> volume;       // V_{N,j}
  std::vector<double> zeta;         // 1 / (N V_{N,j})
  std::vector<double> centroid;     // flat, dim per cell
  std::vector<double> covariation;  // flat, dim*dim per cell, symmetric PSD
  std::vector<double> diameter;     // bounding-box diagonal of in-cell samples
  std::vector<std::size_t> empty_cells;

  Matrix covariation_matrix(std::size_t j) const;
};

CellStats cell_stats(const CellPartition& q, std::int64_t mc_points, std::uint64_t seed);

// The detection-optimized design pipeline: score field -> q* target -> rejection sampling
// -> LBG. Uses the model's domain box and a 101-node-per-axis grid.
LbgResult design_detection_quantizer(const ProcessModel& model, std::size_t n_cells, int k,
                                     int n_mc, std::size_t n_train, std::uint64_t seed);

// CSV: header "index,x1,...,xd", one row per codepoint
void write_codebook_csv(std::ostream& os, const Codebook& cb);
void write_codebook_csv_file(const std::string& path, const Codebook& cb);
Codebook read_codebook_csv_file(const std::string& path, const Box& domain);

}  // namespace npquant
