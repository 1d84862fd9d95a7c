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

#include <gtest/gtest.h>

#include <cmath>

#include "feedsynth/errors.hpp"
#include "feedsynth/grid.hpp"

using namespace feedsynth;

TEST(Grid, LayoutIsRowMajorAndEndsExactlyOnHi)
{
  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 0.3;
  const Grid g(lo, hi, {5, 4});
  EXPECT_EQ(g.node_count(), 20u);
  EXPECT_EQ(g.stride(0), 4u);
  EXPECT_EQ(g.stride(1), 1u);
  EXPECT_EQ(g.coord(1, 3), 0.3);
  EXPECT_EQ(g.axis_index(13, 0), 3);
  EXPECT_EQ(g.axis_index(13, 1), 1);
  EXPECT_DOUBLE_EQ(g.node(13)[0], 0.5);
}

TEST(Grid, RejectsDegenerateAxes)
{
  EXPECT_THROW(Grid(Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), {2}), InvalidArgument);
  EXPECT_THROW(Grid(Vec::Constant(1, 1.0), Vec::Constant(1, 1.0), {5}), InvalidArgument);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0), InvalidArgument);
}

TEST(Grid, QuadratureWeightsIntegrateConstants)
{
  Vec lo(2), hi(2);
  lo << -1.0, -2.0;
  hi << 2.0, 2.0;
  const Grid g(lo, hi, {7, 9});
  double total = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    total += g.quadrature_weight(n);
  EXPECT_NEAR(total, 12.0, 1e-12);
}

TEST(GridField, InterpolationReproducesAffineFields)
{
  Vec lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 2.0;
  const Grid g(lo, hi, {6, 8});
  const TimeGrid tg(0.0, 1.0, 4);
  GridField f(g, tg, 1);
  for (int k = 0; k < f.slices(); ++k)
    for (std::size_t n = 0; n < g.node_count(); ++n)
    {
      const Vec x = g.node(n);
      f(k, n, 0) = 1.0 + 2.0 * x[0] - 0.5 * x[1] + 3.0 * tg.time(k);
    }
  Vec x(2);
  x << 0.123, 1.777;
  EXPECT_NEAR(f.interpolate(0.37, x)[0], 1.0 + 0.246 - 0.8885 + 1.11, 1e-13);
  // Clamped outside the box.
  x << 5.0, -7.0;
  EXPECT_NEAR(f.interpolate(0.0, x)[0], 1.0 + 2.0 + 0.5, 1e-13);
}

TEST(GridField, SpatialGradientIsExactForQuadraticsInTheInterior)
{
  const Grid g(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {21});
  const TimeGrid tg(0.0, 1.0, 1);
  GridField f(g, tg, 1);
  for (std::size_t n = 0; n < g.node_count(); ++n)
  {
    const double x = g.coord(0, static_cast<int>(n));
    f(0, n, 0) = f(1, n, 0) = x * x;
  }
  const std::vector<double> d = spatial_gradient(f, 0);
  for (std::size_t n = 0; n < g.node_count(); ++n)
    EXPECT_NEAR(d[n], 2.0 * g.coord(0, static_cast<int>(n)), 1e-12);
  EXPECT_NEAR(max_gradient_norm(f), 2.0, 1e-12);
}

TEST(GridField, GradientFieldDoesNotDependOnWorkers)
{
  Vec lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 1.0, 1.0;
  const Grid g(lo, hi, {9, 11});
  const TimeGrid tg(0.0, 1.0, 7);
  GridField f(g, tg, 2);
  for (std::size_t i = 0; i < f.data().size(); ++i)
    f.data()[i] = std::sin(0.37 * static_cast<double>(i));
  EXPECT_EQ(gradient_field(f, 1).data(), gradient_field(f, 3).data());
}

TEST(TimeGrid, LocateSnapsToSlices)
{
  const TimeGrid tg(0.0, 1.0, 10);
  int slice = -1;
  double frac = -1.0;
  tg.locate(tg.time(3), slice, frac);
  EXPECT_EQ(slice, 3);
  EXPECT_NEAR(frac, 0.0, 1e-12);
  tg.locate(1.0, slice, frac);
  EXPECT_EQ(slice, 9);
  EXPECT_EQ(frac, 1.0);
}
