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

#include "feedsynth/costate.hpp"
#include "feedsynth/lqr.hpp"

using namespace feedsynth;

namespace
{

const LQRSpec kScalar{Mat::Zero(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1),
                      Mat::Identity(1, 1), Mat::Zero(1, 1)};

Grid line(int nodes) { return Grid(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {nodes}); }

} // namespace

TEST(Costate, VanishesForZeroCost)
{
  const ControlProblem p = zero_cost_problem(2, 1, 1.0);
  Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
  GridField u(Grid(lo, hi, {5, 5}), TimeGrid(0.0, 1.0, 10), 1, 0.3);
  const CostateSolution s = solve_costate(p, u);
  for (double v : s.p.data())
    EXPECT_EQ(v, 0.0);
}

TEST(Costate, TerminalDataIsMinusGradG)
{
  ControlProblem p = zero_cost_problem(1, 1, 1.0);
  p.terminal_cost = [](const Vec &x) { return 0.5 * x.squaredNorm(); };
  p.terminal_cost_grad = [](const Vec &x) -> Vec { return x; };
  const GridField u(line(21), TimeGrid(0.0, 1.0, 20), 1);
  const CostateSolution s = solve_costate(p, u);
  // f = 0 and F = 0, so p is constant in time.
  for (int k = 0; k < s.p.slices(); ++k)
    for (std::size_t n = 0; n < 21; ++n)
      EXPECT_NEAR(s.p(k, n, 0), -u.grid().coord(0, static_cast<int>(n)), 1e-14);
}

TEST(Costate, OptimalLqrFieldSatisfiesStationarity)
{
  // With F_u = u and f_u = 1, stationarity means p = u.
  const ControlProblem p = lqr_to_problem(kScalar, 1.0);
  const Grid g = line(201);
  const TimeGrid tg(0.0, 1.0, 200);
  const GridField u = lqr_feedback_field(kScalar, solve_riccati(derive_lqr(kScalar), 1.0, 200), g, tg);
  const CostateSolution s = solve_costate(p, u);
  double worst = 0.0;
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t n = 0; n < g.node_count(); ++n)
      if (std::abs(g.coord(0, static_cast<int>(n))) <= 1.0)
        worst = std::max(worst, std::abs(s.p(k, n, 0) - u(k, n, 0)));
  EXPECT_LT(worst, 1e-4);
  EXPECT_FALSE(s.cfl_warning);
}

TEST(Costate, IndependentOfWorkers)
{
  const ControlProblem p = lqr_to_problem(kScalar, 1.0);
  GridField u(line(41), TimeGrid(0.0, 1.0, 40), 1);
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t n = 0; n < 41; ++n)
      u(k, n, 0) = std::sin(u.grid().coord(0, static_cast<int>(n)) + u.time_grid().time(k));
  EXPECT_EQ(solve_costate(p, u, {1}).p.data(), solve_costate(p, u, {4}).p.data());
}

TEST(Costate, FlagsLargeCfl)
{
  const ControlProblem p = lqr_to_problem(kScalar, 1.0);
  const GridField u(line(41), TimeGrid(0.0, 1.0, 4), 1, 1.0);
  const CostateSolution s = solve_costate(p, u);
  EXPECT_NEAR(s.max_cfl, 0.25 / 0.1, 1e-12);
  EXPECT_TRUE(s.cfl_warning);
}

TEST(Costate, QuadraticStateCostIntegratesLinearly)
{
  // f = u, F = u^2/2 + x^2/2, u = 0: p(t, x) = (t - T) x.
  const ControlProblem p = lqr_to_problem(kScalar, 1.0);
  const GridField u(line(41), TimeGrid(0.0, 1.0, 50), 1);
  const CostateSolution s = solve_costate(p, u);
  for (int k = 0; k < s.p.slices(); ++k)
    for (std::size_t n = 0; n < 41; ++n)
    {
      const double x = u.grid().coord(0, static_cast<int>(n));
      EXPECT_NEAR(s.p(k, n, 0), (u.time_grid().time(k) - 1.0) * x, 1e-6);
    }
}
