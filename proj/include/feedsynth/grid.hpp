/*
 Copyright 2026 The feedsynth Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef FEEDSYNTH_GRID_HPP_
#define FEEDSYNTH_GRID_HPP_

#include <cstddef>
#include <vector>

#include "feedsynth/problem.hpp"

namespace feedsynth
{

inline constexpr int kMaxGridDim = 6;

/**
 * @brief Uniform tensor lattice on the box [lo, hi].
 *
 * Nodes are numbered in row-major order: the first axis varies slowest.
 * Node coordinates are lo + i*h except the last node on each axis, which is
 * hi exactly.
 */
class Grid
{
public:
  Grid(Vec lo, Vec hi, std::vector<int> nodes_per_axis);

  int dim() const { return static_cast<int>(nodes_.size()); }
  std::size_t node_count() const { return node_count_; }
  int nodes(int axis) const { return nodes_[axis]; }
  const std::vector<int> &nodes() const { return nodes_; }
  const Vec &lo() const { return lo_; }
  const Vec &hi() const { return hi_; }
  double spacing(int axis) const { return h_[axis]; }
  double min_spacing() const;
  std::size_t stride(int axis) const { return strides_[axis]; }

  double coord(int axis, int i) const
  {
    return i == nodes_[axis] - 1 ? hi_[axis] : lo_[axis] + i * h_[axis];
  }
  int axis_index(std::size_t node, int axis) const
  {
    return static_cast<int>((node / strides_[axis]) % static_cast<std::size_t>(nodes_[axis]));
  }
  Vec node(std::size_t index) const;
  void node_into(std::size_t index, double *out) const;

  /// Product trapezoidal weight of a node (h at interior, h/2 at faces, per axis).
  double quadrature_weight(std::size_t index) const;
  /// One-axis trapezoidal weight.
  double axis_weight(int axis, int i) const
  {
    return (i == 0 || i == nodes_[axis] - 1) ? 0.5 * h_[axis] : h_[axis];
  }

  Vec clamp(const Vec &x) const;
  /// Cell index in [0, nodes-2] and fraction in [0,1]; queries that hit a
  /// node coordinate exactly get fraction 0 (or 1 on the last node).
  void locate(int axis, double x, int &cell, double &frac) const;

  bool operator==(const Grid &other) const;
  bool operator!=(const Grid &other) const { return !(*this == other); }

private:
  Vec lo_, hi_;
  std::vector<int> nodes_;
  std::vector<double> h_;
  std::vector<std::size_t> strides_;
  std::size_t node_count_ = 0;
};

/// Uniform partition t0 < t0+dt < ... < t1.
class TimeGrid
{
public:
  TimeGrid(double t0, double t1, int steps);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double time(int k) const { return k == steps_ ? t1_ : t0_ + k * dt_; }
  /// Slice index in [0, steps-1] and fraction; exact slice times get fraction 0
  /// (or 1 on the last slice).
  void locate(double t, int &slice, double &frac) const;

  bool operator==(const TimeGrid &other) const
  {
    return t0_ == other.t0_ && t1_ == other.t1_ && steps_ == other.steps_;
  }

private:
  double t0_, t1_, dt_;
  int steps_;
};

/**
 * @brief Time-indexed field on a Grid with `components` values per node.
 *
 * Storage is (time slice, node, component) contiguous. Off-grid evaluation is
 * multilinear in x (after clamping to the box) and linear in t.
 */
class GridField
{
public:
  GridField(Grid grid, TimeGrid time_grid, int components, double fill = 0.0);

  const Grid &grid() const { return grid_; }
  const TimeGrid &time_grid() const { return time_grid_; }
  int components() const { return components_; }
  int slices() const { return time_grid_.steps() + 1; }
  std::size_t slice_size() const { return grid_.node_count() * components_; }

  double *slice(int k) { return values_.data() + static_cast<std::size_t>(k) * slice_size(); }
  const double *slice(int k) const
  {
    return values_.data() + static_cast<std::size_t>(k) * slice_size();
  }
  double &operator()(int k, std::size_t node, int c)
  {
    return values_[static_cast<std::size_t>(k) * slice_size() + node * components_ + c];
  }
  double operator()(int k, std::size_t node, int c) const
  {
    return values_[static_cast<std::size_t>(k) * slice_size() + node * components_ + c];
  }
  Vec value(int k, std::size_t node) const;
  void set_value(int k, std::size_t node, const Vec &v);

  std::vector<double> &data() { return values_; }
  const std::vector<double> &data() const { return values_; }

  /// Multilinear evaluation within slice k; writes `components()` values.
  void interpolate_slice(int k, const double *x, double *out) const;
  void interpolate(double t, const double *x, double *out) const;
  Vec interpolate(double t, const Vec &x) const;

  bool all_finite() const;
  bool same_layout(const GridField &other) const;

private:
  Grid grid_;
  TimeGrid time_grid_;
  int components_;
  std::vector<double> values_;
};

/// Multilinear interpolation of one slice array laid out as (node, component).
void interpolate_slice_values(const Grid &grid, const double *slice, int components,
                              const double *x, double *out);

/**
 * Finite-difference Jacobian of one slice: central differences at interior
 * nodes, second-order one-sided differences on box faces. Output layout is
 * (node, i*dim + j) holding d(component i)/d(x_j).
 */
std::vector<double> spatial_gradient(const GridField &field, int time_index);
void spatial_gradient_into(const Grid &grid, const double *slice, int components, double *out);

/// spatial_gradient applied to every slice; components() * dim components.
GridField gradient_field(const GridField &field, int workers = 1);

/// Largest Frobenius norm of the spatial Jacobian over all nodes and slices
/// (a discrete Lipschitz constant).
double max_gradient_norm(const GridField &field, int workers = 1);

} // namespace feedsynth

#endif // FEEDSYNTH_GRID_HPP_
