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
#include "feedsynth/flow.hpp"

using namespace feedsynth;

namespace
{

ControlProblem scalar_lqr()
{
  return lqr_to_problem({Mat::Zero(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1),
                         Mat::Identity(1, 1), Mat::Zero(1, 1)},
                        1.0);
}

GridField linear_feedback(double gain, int steps = 100)
{
  const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {41});
  GridField u(g, TimeGrid(0.0, 1.0, steps), 1);
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t n = 0; n < g.node_count(); ++n)
      u(k, n, 0) = gain * g.coord(0, static_cast<int>(n));
  return u;
}

} // namespace

TEST(Flow, LinearFeedbackMatchesExponential)
{
  const ControlProblem p = scalar_lqr();
  const GridField u = linear_feedback(-1.0);
  const Trajectory traj = integrate_flow(p, u, 0.0, Vec::Constant(1, 0.8));
  ASSERT_EQ(traj.steps(), 100u);
  EXPECT_EQ(traj.times.back(), 1.0);
  EXPECT_NEAR(traj.states.back()[0], 0.8 * std::exp(-1.0), 1e-9);
  // F = x^2/2 + u^2/2 = x^2 along the path.
  EXPECT_NEAR(trajectory_cost(p, traj), 0.64 * (1.0 - std::exp(-2.0)) / 2.0, 1e-9);
  EXPECT_NEAR(cost_functional(p, u, 0.0, Vec::Constant(1, 0.8)), trajectory_cost(p, traj), 0.0);
}

TEST(Flow, RestartingFromAnIntermediateStateReproducesThePath)
{
  const ControlProblem p = scalar_lqr();
  GridField u = linear_feedback(-1.0);
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t n = 0; n < u.grid().node_count(); ++n)
      u(k, n, 0) = std::sin(u.grid().coord(0, static_cast<int>(n))) - u.time_grid().time(k);
  const Trajectory full = integrate_flow(p, u, 0.0, Vec::Constant(1, 0.3));
  const Trajectory tail = integrate_flow(p, u, full.times[40], full.states[40]);
  ASSERT_EQ(tail.steps(), 60u);
  for (std::size_t i = 0; i < tail.states.size(); ++i)
    EXPECT_NEAR(tail.states[i][0], full.states[40 + i][0], 1e-14);
}

TEST(Flow, LatticeSamples)
{
  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 0.0;
  const std::vector<Sample> s = lattice_samples(0.25, lo, hi, {3, 1});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].t, 0.25);
  EXPECT_EQ(s[0].y[0], -1.0);
  EXPECT_EQ(s[1].y[0], 0.0);
  EXPECT_EQ(s[2].y[0], 1.0);
  EXPECT_THROW(lattice_samples(0.0, lo, hi, {0, 1}), InvalidArgument);
}

TEST(Flow, EnsembleObjectiveIsIndependentOfWorkers)
{
  const ControlProblem p = scalar_lqr();
  const GridField u = linear_feedback(-0.7);
  std::vector<Sample> samples = lattice_samples(0.0, Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {37});
  const std::vector<Sample> later = lattice_samples(0.5, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {5});
  samples.insert(samples.end(), later.begin(), later.end());
  const double one = ensemble_objective(p, u, samples, 1);
  EXPECT_EQ(one, ensemble_objective(p, u, samples, 3));
  EXPECT_EQ(one, ensemble_objective(p, u, samples, 8));
}

TEST(Flow, BlowUpIsReportedWithTime)
{
  ControlProblem p = zero_cost_problem(1, 1, 1.0);
  p.dynamics = [](const Vec &x, const Vec &) -> Vec { return 50.0 * x.array().square(); };
  const GridField u = linear_feedback(0.0);
  try
  {
    integrate_flow(p, u, 0.0, Vec::Constant(1, 1.0));
    FAIL() << "expected a blow-up";
  }
  catch (const BlowUpError &e)
  {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LE(e.time(), 1.0);
  }
}

TEST(Flow, TrajectoryTableHasStatesAndControls)
{
  const Trajectory traj = integrate_flow(scalar_lqr(), linear_feedback(-1.0, 10), 0.0,
                                         Vec::Constant(1, 1.0));
  const CsvTable t = trajectory_table(traj);
  ASSERT_EQ(t.header.size(), 3u);
  EXPECT_EQ(t.header[0], "s");
  ASSERT_EQ(t.rows.size(), 11u);
  EXPECT_NEAR(t.rows.back()[2], -t.rows.back()[1], 1e-15);
}

TEST(Flow, GrowthDynamicsReachesE)
{
  ControlProblem p = academic_problem(scalar_function("identity"), 1.0);
  const GridField u = linear_feedback(0.0);
  const Trajectory traj = integrate_flow(p, u, 0.0, Vec::Constant(1, 1.0));
  EXPECT_NEAR(traj.states.back()[0], std::exp(1.0), 1e-6);
  EXPECT_NEAR(trajectory_cost(p, traj), -(std::exp(2.0) - 1.0) / 4.0, 1e-4);
}

TEST(Flow, UnitRunningCostMeasuresRemainingTime)
{
  ControlProblem p = zero_cost_problem(1, 1, 1.0);
  p.running_cost = [](const Vec &, const Vec &) { return 1.0; };
  const GridField u = linear_feedback(0.0);
  EXPECT_NEAR(cost_functional(p, u, u.time_grid().time(30), Vec::Constant(1, 0.2)), 0.7, 1e-14);
}

TEST(Flow, EnsembleMeanOfTwoSamples)
{
  const ControlProblem p = scalar_lqr();
  const GridField u = linear_feedback(-1.0);
  const Sample a{0.0, Vec::Constant(1, 0.5)}, b{0.2, Vec::Constant(1, -1.5)};
  const double ca = cost_functional(p, u, a.t, a.y), cb = cost_functional(p, u, b.t, b.y);
  EXPECT_NEAR(ensemble_objective(p, u, {a, b}), 0.5 * (ca + cb), 1e-15);
  EXPECT_NEAR(ensemble_objective(p, u, {a, b, a, b}), 0.5 * (ca + cb), 1e-15);
  EXPECT_EQ(ensemble_objective(p, u, {a}), ca);
}
