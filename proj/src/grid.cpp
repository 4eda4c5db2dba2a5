#include "npquant/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace npquant {

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const std::vector<double>& y, double slack) const {
  if (static_cast<int>(y.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (y[i] < lo[i] - slack || y[i] > hi[i] + slack) return false;
  return true;
}

Box Box::cube(int d, double half_width) {
  Box b;
  b.lo.assign(d, -half_width);
  b.hi.assign(d, half_width);
  return b;
}

RegularGrid::RegularGrid(Box box, std::vector<int> nodes_per_axis)
    : box_(std::move(box)), nodes_(std::move(nodes_per_axis)) {
  if (static_cast<int>(nodes_.size()) != box_.dim())
    throw std::invalid_argument("RegularGrid: axis count mismatch");
  total_ = 1;
  steps_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] < 2) throw std::invalid_argument("RegularGrid: need >= 2 nodes per axis");
    if (box_.hi[i] <= box_.lo[i])
      throw std::invalid_argument("RegularGrid: axis not strictly increasing");
    steps_[i] = (box_.hi[i] - box_.lo[i]) / (nodes_[i] - 1);
    total_ *= static_cast<std::size_t>(nodes_[i]);
  }
}

std::vector<double> RegularGrid::node_point(std::size_t flat) const {
  std::vector<double> y(nodes_.size());
  for (std::size_t a = nodes_.size(); a-- > 0;) {
    const std::size_t n = static_cast<std::size_t>(nodes_[a]);
    y[a] = coord(static_cast<int>(a), static_cast<int>(flat % n));
    flat /= n;
  }
  return y;
}

void RegularGrid::node_multi(std::size_t flat, int* idx) const {
  for (std::size_t a = nodes_.size(); a-- > 0;) {
    const std::size_t n = static_cast<std::size_t>(nodes_[a]);
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
}

double RegularGrid::quad_weight(std::size_t flat) const {
  double w = 1.0;
  for (std::size_t a = nodes_.size(); a-- > 0;) {
    const std::size_t n = static_cast<std::size_t>(nodes_[a]);
    const int i = static_cast<int>(flat % n);
    flat /= n;
    w *= steps_[a] * ((i == 0 || i == nodes_[a] - 1) ? 0.5 : 1.0);
  }
  return w;
}

double RegularGrid::interpolate(const std::vector<double>& values,
                                const std::vector<double>& y) const {
  const int d = dim();
  if (static_cast<int>(y.size()) != d)
    throw std::invalid_argument("interpolate: point dimension mismatch");
  // clamp to the box so boundary points evaluate cleanly
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    double t = (y[a] - box_.lo[a]) / steps_[a];
    if (t < 0.0) t = 0.0;
    const double tmax = static_cast<double>(nodes_[a] - 1);
    if (t > tmax) t = tmax;
    int i = static_cast<int>(t);
    if (i > nodes_[a] - 2) i = nodes_[a] - 2;
    base[a] = i;
    frac[a] = t - i;
  }
  double out = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      const int bit = (c >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      flat = flat * static_cast<std::size_t>(nodes_[a]) +
             static_cast<std::size_t>(base[a] + bit);
    }
    out += w * values[flat];
  }
  return out;
}

bool RegularGrid::same_layout(const RegularGrid& other) const {
  if (nodes_ != other.nodes_) return false;
  for (int a = 0; a < dim(); ++a) {
    if (std::abs(box_.lo[a] - other.box_.lo[a]) > 1e-12) return false;
    if (std::abs(box_.hi[a] - other.box_.hi[a]) > 1e-12) return false;
  }
  return true;
}

double trapezoid_integral(const RegularGrid& grid, const std::vector<double>& values) {
  if (values.size() != grid.total_nodes())
    throw std::invalid_argument("trapezoid_integral: value count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += grid.quad_weight(i) * values[i];
  return s;
}

void DensityField::normalize() {
  const double z = integral();
  if (!(z > 0.0)) throw std::domain_error("DensityField::normalize: zero or invalid mass");
  for (double& v : values) v /= z;
}

Matrix ScoreBundle::second_moment(std::size_t node) const {
  Matrix m(dim, dim);
  const std::size_t off = node * static_cast<std::size_t>(dim) * dim;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = second_moments[off + i * dim + j];
  return m;
}

CovariationProfile CovariationProfile::isotropic(double nu, int dim) {
  CovariationProfile p;
  p.kind_ = Kind::Isotropic;
  p.nu_ = nu;
  p.dim_ = dim;
  p.constant_ = Matrix::identity(dim);
  for (int i = 0; i < dim; ++i) p.constant_(i, i) = nu;
  return p;
}

CovariationProfile CovariationProfile::constant(const Matrix& m) {
  CovariationProfile p;
  p.kind_ = Kind::Constant;
  p.dim_ = static_cast<int>(m.rows());
  p.constant_ = m;
  return p;
}

CovariationProfile CovariationProfile::per_node(std::vector<Matrix> ms, int dim) {
  CovariationProfile p;
  p.kind_ = Kind::PerNode;
  p.dim_ = dim;
  p.per_node_ = std::move(ms);
  return p;
}

const Matrix& CovariationProfile::at(std::size_t node) const {
  if (kind_ == Kind::PerNode) return per_node_.at(node);
  return constant_;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(std::ostream& os, const RegularGrid& grid,
                     const std::vector<double>& values, const std::vector<double>& stderrs) {
  for (int a = 0; a < grid.dim(); ++a) os << "x" << (a + 1) << ",";
  os << "value,stderr\n";
  for (std::size_t i = 0; i < grid.total_nodes(); ++i) {
    const auto pt = grid.node_point(i);
    for (double c : pt) os << format_double(c) << ",";
    os << format_double(values[i]) << ","
       << format_double(stderrs.empty() ? 0.0 : stderrs[i]) << "\n";
  }
}

void write_field_csv_file(const std::string& path, const RegularGrid& grid,
                          const std::vector<double>& values,
                          const std::vector<double>& stderrs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_field_csv(f, grid, values, stderrs);
}

}  // namespace npquant
