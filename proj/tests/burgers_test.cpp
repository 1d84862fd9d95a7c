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

#include "feedsynth/burgers.hpp"
#include "feedsynth/errors.hpp"

using namespace feedsynth;

TEST(Burgers, ConstantDataTransportsUnchanged)
{
  const ScalarFunction c{"const", [](double) { return 0.4; }, [](double) { return 0.0; }};
  const BurgersSolution sol(c, 1.0);
  EXPECT_FALSE(sol.blowup_time().has_value());
  for (double t : {0.0, 0.3, 1.0})
    for (double x : {-3.0, 0.0, 2.5})
      EXPECT_NEAR(sol.eval(t, x), 0.4, 1e-14);
  EXPECT_LE(sol.residual(0.5, 0.1), 1e-9);
}

TEST(Burgers, IdentityDataGivesXOverT)
{
  const BurgersSolution sol(scalar_function("identity"), 1.0);
  ASSERT_TRUE(sol.blowup_time().has_value());
  EXPECT_NEAR(*sol.blowup_time(), 0.0, 1e-6);
  EXPECT_NEAR(sol.eval(0.5, 1.0), 2.0, 1e-10);
  for (double t : {0.1, 0.4, 0.9})
    for (double x : {-1.5, -0.2, 0.7})
      EXPECT_NEAR(sol.eval(t, x), x / t, 1e-8);
  // Away from the singular start the O(h^2 / t^4) difference error is small.
  for (double t : {0.5, 0.7, 0.9})
    for (double x : {-1.0, -0.2, 0.7})
      EXPECT_LE(sol.residual(t, x), 1e-6);
  EXPECT_THROW(sol.eval(0.0, 1.0), InvalidArgument);
}

TEST(Burgers, NegatedIdentityHasNoBlowUp)
{
  const BurgersSolution sol(scalar_function("neg_identity"), 1.0);
  EXPECT_FALSE(sol.blowup_time().has_value());
  EXPECT_NEAR(sol.eval(0.0, 1.0), -0.5, 1e-10);
  for (double t : {0.0, 0.5, 0.95})
    for (double x : {-2.0, 0.3, 1.1})
      EXPECT_NEAR(sol.eval(t, x), -x / (2.0 - t), 1e-8);
  EXPECT_LE(sol.residual(0.5, 0.3), 1e-6);
}

TEST(Burgers, TanhBlowsUpAtOneUnitBeforeTheHorizon)
{
  const BurgersSolution sol(scalar_function("tanh"), 2.0);
  ASSERT_TRUE(sol.blowup_time().has_value());
  EXPECT_NEAR(*sol.blowup_time(), 1.0, 1e-6);
  EXPECT_LE(sol.residual(1.5, 0.2), 1e-6);
  const double xi = sol.foot(1.5, 0.2);
  EXPECT_NEAR(xi + (1.5 - 2.0) * std::tanh(xi), 0.2, 1e-12);
}

TEST(Burgers, FieldsOnTheGrid)
{
  const BurgersSolution sol(scalar_function("neg_identity"), 1.0);
  const Grid g(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {11});
  const TimeGrid tg(0.0, 1.0, 10);
  const GridField u = burgers_field(sol, g, tg);
  const GridField a = academic_control_field(sol, g, tg);
  for (int k = 0; k <= 10; ++k)
    for (int i = 0; i < 11; ++i)
    {
      const double x = g.coord(0, i), t = tg.time(k);
      EXPECT_NEAR(u(k, i, 0), -x / (2.0 - t), 1e-10);
      EXPECT_NEAR(a(k, i, 0), x * (1.0 - t) / (2.0 - t), 1e-10);
    }
  const GridField early = burgers_field(BurgersSolution(scalar_function("identity"), 1.0), g, tg);
  EXPECT_TRUE(std::isnan(early(0, 3, 0)));
  EXPECT_FALSE(std::isnan(early(1, 3, 0)));
}

TEST(AcademicFeedback, ZeroDriftIsStraight)
{
  const Grid g(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {21});
  const AcademicFeedbackReport r =
      verify_academic_feedback(scalar_function("zero"), 1.0, g, TimeGrid(0.0, 1.0, 100),
                               lattice_samples(0.0, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {5}));
  EXPECT_EQ(r.checked, 5);
  EXPECT_EQ(r.max_el_residual, 0.0);
  EXPECT_EQ(r.max_terminal_residual, 0.0);
}

TEST(AcademicFeedback, DampedDriftTrajectoriesAreStraightLines)
{
  const auto starts = lattice_samples(0.0, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {9});
  double previous = 0.0;
  for (int refine : {1, 2, 4})
  {
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {40 * refine + 1});
    const AcademicFeedbackReport r = verify_academic_feedback(
        scalar_function("neg_identity"), 1.0, g, TimeGrid(0.0, 1.0, 250 * refine), starts);
    EXPECT_EQ(r.checked, 9);
    EXPECT_LE(r.max_terminal_residual, 1e-4);
    if (refine > 1)
    {
      EXPECT_LT(r.max_el_residual, previous);
    }
    previous = r.max_el_residual;
  }
}

TEST(AcademicFeedback, StartsBeforeBlowUpAreFlagged)
{
  const Grid g(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0), {21});
  const std::vector<Sample> starts{{0.0, Vec::Constant(1, 0.5)}, {0.5, Vec::Constant(1, 0.5)}};
  const AcademicFeedbackReport r =
      verify_academic_feedback(scalar_function("tanh"), 2.0, g, TimeGrid(0.0, 2.0, 40), starts);
  EXPECT_TRUE(r.affected[0]);
  EXPECT_TRUE(r.affected[1]);
  EXPECT_EQ(r.checked, 0);
}
