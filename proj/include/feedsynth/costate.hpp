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

#ifndef FEEDSYNTH_COSTATE_HPP_
#define FEEDSYNTH_COSTATE_HPP_

#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

struct CostateOptions
{
  int workers = 1;
};

/// Costate field p(t, x) (N components) plus transport diagnostics.
struct CostateSolution
{
  GridField p;
  /// max over nodes and steps of |f| dt / min spacing.
  double max_cfl = 0.0;
  /// Set when max_cfl > 1: foot points travel more than one cell per step.
  /// Semi-Lagrangian transport stays stable; accuracy degrades.
  bool cfl_warning = false;
};

/**
 * @brief Backward semi-Lagrangian solve of the costate transport system
 *
 *   p_t + (grad p) f(x, u) + p grad[f(x, u(t,x))] = grad[F(x, u(t,x))].
 *
 * For every node the characteristic is traced one step forward with the RK2
 * midpoint rule, p is interpolated at the foot point on the later slice, and
 * the along-characteristic ODE p' = grad[F] - p grad[f] is closed with the
 * trapezoidal rule (implicit in the unknown end). Total derivatives use
 * grad[f] = f_x + f_u grad u and grad[F] = F_x + F_u grad u with grad u from
 * grid finite differences.
 *
 * Terminal data is p(T, x) = -grad g(x), which makes F_u - p f_u the
 * gradient of the cost; for problems with g folded into F this is zero.
 *
 * Throws BlowUpError naming the slice time if p becomes non-finite.
 */
CostateSolution solve_costate(const ControlProblem &problem, const GridField &u,
                              const CostateOptions &options = {});

} // namespace feedsynth

#endif // FEEDSYNTH_COSTATE_HPP_
