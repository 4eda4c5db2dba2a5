#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "npquant/linalg.hpp"

namespace npquant {

// Axis-aligned box in R^d.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const std::vector<double>& y, double slack = 0.0) const;

  static Box cube(int d, double half_width);
};

// Regular lattice over a box; nodes include both endpoints on every axis.
// Flat indexing is row-major (the last axis varies fastest), which is also
// the CSV serialization order.
class RegularGrid {
 public:
  RegularGrid() = default;
  RegularGrid(Box box, std::vector<int> nodes_per_axis);

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  int nodes(int axis) const { return nodes_[axis]; }
  std::size_t total_nodes() const { return total_; }
  double step(int axis) const { return steps_[axis]; }

  double coord(int axis, int i) const { return box_.lo[axis] + steps_[axis] * i; }
  std::vector<double> node_point(std::size_t flat) const;
  void node_multi(std::size_t flat, int* idx) const;

  // product-form trapezoidal quadrature weight of a node
  double quad_weight(std::size_t flat) const;

  // multilinear interpolation of nodal values at an in-box point
  double interpolate(const std::vector<double>& values, const std::vector<double>& y) const;

  bool same_layout(const RegularGrid& other) const;

 private:
  Box box_;
  std::vector<int> nodes_;
  std::vector<double> steps_;
  std::size_t total_ = 0;
};

double trapezoid_integral(const RegularGrid& grid, const std::vector<double>& values);

enum class FieldKind { probability_density, point_density };

// Grid-sampled nonnegative function normalized to unit trapezoidal integral.
struct DensityField {
  RegularGrid grid;
  FieldKind kind = FieldKind::probability_density;
  std::vector<double> values;

  // scales values so the trapezoidal integral is 1; throws on zero mass
  void normalize();
  double integral() const { return trapezoid_integral(grid, values); }
};

// Grid-sampled nonnegative score values with per-node Monte-Carlo errors.
struct ScoreField {
  RegularGrid grid;
  std::vector<double> values;
  std::vector<double> stderrs;  // empty when the field is exact
};

// ScoreField plus the per-node second-moment matrices of the score gradient,
// needed when the covariation profile is not isotropic.
struct ScoreBundle {
  ScoreField fbar;
  std::vector<double> second_moments;  // packed d*d per node, row-major
  int dim = 0;

  Matrix second_moment(std::size_t node) const;
};

// Cell-shape profile M: either nu * I, one constant matrix, or per-node.
class CovariationProfile {
 public:
  static CovariationProfile isotropic(double nu, int dim);
  static CovariationProfile constant(const Matrix& m);
  static CovariationProfile per_node(std::vector<Matrix> ms, int dim);

  int dim() const { return dim_; }
  bool is_isotropic() const { return kind_ == Kind::Isotropic; }
  double nu() const { return nu_; }
  const Matrix& at(std::size_t node) const;

 private:
  enum class Kind { Isotropic, Constant, PerNode } kind_ = Kind::Isotropic;
  double nu_ = 1.0;
  int dim_ = 1;
  Matrix constant_;
  std::vector<Matrix> per_node_;
};

// CSV layout: header "x1,...,xd,value,stderr", one row per node, row-major.
void write_field_csv(std::ostream& os, const RegularGrid& grid,
                     const std::vector<double>& values, const std::vector<double>& stderrs);
void write_field_csv_file(const std::string& path, const RegularGrid& grid,
                          const std::vector<double>& values,
                          const std::vector<double>& stderrs = {});

// formats doubles the way every CSV/JSON writer in this project does
std::string format_double(double v);

}  // namespace npquant
