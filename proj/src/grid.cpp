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

#include "feedsynth/grid.hpp"

#include <algorithm>
#include <cmath>

#include "feedsynth/errors.hpp"
#include "feedsynth/parallel.hpp"

namespace feedsynth
{

Grid::Grid(Vec lo, Vec hi, std::vector<int> nodes_per_axis)
    : lo_(std::move(lo)), hi_(std::move(hi)), nodes_(std::move(nodes_per_axis))
{
  const int n = static_cast<int>(nodes_.size());
  if (n == 0 || n > kMaxGridDim)
    throw InvalidArgument("grid dimension must be between 1 and 6");
  if (lo_.size() != n || hi_.size() != n)
    throw InvalidArgument("grid bounds must match the number of axes");
  h_.resize(n);
  strides_.resize(n);
  node_count_ = 1;
  for (int d = 0; d < n; ++d) {
    if (!std::isfinite(lo_[d]) || !std::isfinite(hi_[d]) || !(lo_[d] < hi_[d]))
      throw InvalidArgument("grid requires finite lo < hi on every axis");
    if (nodes_[d] < 3)
      throw InvalidArgument("grid requires at least 3 nodes per axis");
    h_[d] = (hi_[d] - lo_[d]) / (nodes_[d] - 1);
    node_count_ *= static_cast<std::size_t>(nodes_[d]);
  }
  std::size_t stride = 1;
  for (int d = n - 1; d >= 0; --d) {
    strides_[d] = stride;
    stride *= static_cast<std::size_t>(nodes_[d]);
  }
}

double Grid::min_spacing() const { return *std::min_element(h_.begin(), h_.end()); }

Vec Grid::node(std::size_t index) const
{
  Vec x(dim());
  node_into(index, x.data());
  return x;
}

void Grid::node_into(std::size_t index, double *out) const
{
  for (int d = 0; d < dim(); ++d)
    out[d] = coord(d, axis_index(index, d));
}

double Grid::quadrature_weight(std::size_t index) const
{
  double w = 1.0;
  for (int d = 0; d < dim(); ++d)
    w *= axis_weight(d, axis_index(index, d));
  return w;
}

Vec Grid::clamp(const Vec &x) const { return x.cwiseMax(lo_).cwiseMin(hi_); }

void Grid::locate(int axis, double x, int &cell, double &frac) const
{
  const int n = nodes_[axis];
  const double xc = std::min(std::max(x, lo_[axis]), hi_[axis]);
  const double s = (xc - lo_[axis]) / h_[axis];
  const int nearest = std::min(std::max(static_cast<int>(std::lround(s)), 0), n - 1);
  if (coord(axis, nearest) == xc) {
    cell = std::min(nearest, n - 2);
    frac = nearest == cell ? 0.0 : 1.0;
    return;
  }
  cell = std::min(std::max(static_cast<int>(std::floor(s)), 0), n - 2);
  frac = std::min(std::max((xc - coord(axis, cell)) / h_[axis], 0.0), 1.0);
}

bool Grid::operator==(const Grid &other) const
{
  return nodes_ == other.nodes_ && lo_ == other.lo_ && hi_ == other.hi_;
}

TimeGrid::TimeGrid(double t0, double t1, int steps) : t0_(t0), t1_(t1), steps_(steps)
{
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t0 < t1))
    throw InvalidArgument("time grid requires finite t0 < T");
  if (steps < 1)
    throw InvalidArgument("time grid requires at least one step");
  dt_ = (t1 - t0) / steps;
}

void TimeGrid::locate(double t, int &slice, double &frac) const
{
  const double tc = std::min(std::max(t, t0_), t1_);
  const double s = (tc - t0_) / dt_;
  const int nearest = std::min(std::max(static_cast<int>(std::lround(s)), 0), steps_);
  if (time(nearest) == tc) {
    slice = std::min(nearest, steps_ - 1);
    frac = nearest == slice ? 0.0 : 1.0;
    return;
  }
  slice = std::min(std::max(static_cast<int>(std::floor(s)), 0), steps_ - 1);
  frac = std::min(std::max((tc - time(slice)) / dt_, 0.0), 1.0);
}

GridField::GridField(Grid grid, TimeGrid time_grid, int components, double fill)
    : grid_(std::move(grid)), time_grid_(time_grid), components_(components)
{
  if (components <= 0)
    throw InvalidArgument("field needs at least one component");
  values_.assign(static_cast<std::size_t>(time_grid_.steps() + 1) * slice_size(), fill);
}

Vec GridField::value(int k, std::size_t node) const
{
  Vec v(components_);
  for (int c = 0; c < components_; ++c)
    v[c] = (*this)(k, node, c);
  return v;
}

void GridField::set_value(int k, std::size_t node, const Vec &v)
{
  for (int c = 0; c < components_; ++c)
    (*this)(k, node, c) = v[c];
}

void interpolate_slice_values(const Grid &grid, const double *slice, int components,
                              const double *x, double *out)
{
  const int n = grid.dim();
  int cell[kMaxGridDim];
  double frac[kMaxGridDim];
  std::size_t base = 0;
  for (int d = 0; d < n; ++d) {
    grid.locate(d, x[d], cell[d], frac[d]);
    base += static_cast<std::size_t>(cell[d]) * grid.stride(d);
  }
  for (int c = 0; c < components; ++c)
    out[c] = 0.0;
  const unsigned corners = 1u << n;
  for (unsigned mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t idx = base;
    for (int d = 0; d < n; ++d) {
      if (mask & (1u << d)) {
        w *= frac[d];
        idx += grid.stride(d);
      } else {
        w *= 1.0 - frac[d];
      }
    }
    if (w == 0.0)
      continue;
    const double *v = slice + idx * components;
    for (int c = 0; c < components; ++c)
      out[c] += w * v[c];
  }
}

void GridField::interpolate_slice(int k, const double *x, double *out) const
{
  interpolate_slice_values(grid_, slice(k), components_, x, out);
}

void GridField::interpolate(double t, const double *x, double *out) const
{
  int k;
  double theta;
  time_grid_.locate(t, k, theta);
  if (theta == 0.0) {
    interpolate_slice(k, x, out);
    return;
  }
  if (theta == 1.0) {
    interpolate_slice(k + 1, x, out);
    return;
  }
  double lower[64];
  double upper[64];
  std::vector<double> heap_lower, heap_upper;
  double *a = lower, *b = upper;
  if (components_ > 64) {
    heap_lower.resize(components_);
    heap_upper.resize(components_);
    a = heap_lower.data();
    b = heap_upper.data();
  }
  interpolate_slice(k, x, a);
  interpolate_slice(k + 1, x, b);
  for (int c = 0; c < components_; ++c)
    out[c] = (1.0 - theta) * a[c] + theta * b[c];
}

Vec GridField::interpolate(double t, const Vec &x) const
{
  Vec out(components_);
  interpolate(t, x.data(), out.data());
  return out;
}

bool GridField::all_finite() const
{
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool GridField::same_layout(const GridField &other) const
{
  return grid_ == other.grid_ && time_grid_ == other.time_grid_ &&
         components_ == other.components_;
}

void spatial_gradient_into(const Grid &grid, const double *slice, int components, double *out)
{
  const int n = grid.dim();
  const std::size_t width = static_cast<std::size_t>(components) * n;
  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    for (int d = 0; d < n; ++d) {
      const int i = grid.axis_index(node, d);
      const int last = grid.nodes(d) - 1;
      const std::size_t s = grid.stride(d);
      const double h = grid.spacing(d);
      for (int c = 0; c < components; ++c) {
        auto at = [&](std::size_t idx) { return slice[idx * components + c]; };
        double g;
        if (i == 0)
          g = (-3.0 * at(node) + 4.0 * at(node + s) - at(node + 2 * s)) / (2.0 * h);
        else if (i == last)
          g = (3.0 * at(node) - 4.0 * at(node - s) + at(node - 2 * s)) / (2.0 * h);
        else
          g = (at(node + s) - at(node - s)) / (2.0 * h);
        out[node * width + static_cast<std::size_t>(c) * n + d] = g;
      }
    }
  }
}

std::vector<double> spatial_gradient(const GridField &field, int time_index)
{
  std::vector<double> out(field.grid().node_count() * field.components() * field.grid().dim());
  spatial_gradient_into(field.grid(), field.slice(time_index), field.components(), out.data());
  return out;
}

GridField gradient_field(const GridField &field, int workers)
{
  GridField out(field.grid(), field.time_grid(), field.components() * field.grid().dim());
  parallel_for(static_cast<std::size_t>(field.slices()), workers, [&](std::size_t k) {
    spatial_gradient_into(field.grid(), field.slice(static_cast<int>(k)), field.components(),
                          out.slice(static_cast<int>(k)));
  });
  return out;
}

double max_gradient_norm(const GridField &field, int workers)
{
  const GridField grad = gradient_field(field, workers);
  const int width = grad.components();
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.data().size(); i += width) {
    double s = 0.0;
    for (int c = 0; c < width; ++c)
      s += grad.data()[i + c] * grad.data()[i + c];
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

} // namespace feedsynth
