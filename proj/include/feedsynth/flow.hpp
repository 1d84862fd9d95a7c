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

#ifndef FEEDSYNTH_FLOW_HPP_
#define FEEDSYNTH_FLOW_HPP_

#include <functional>
#include <vector>

#include "feedsynth/field_io.hpp"
#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

/**
 * @brief Closed-loop path x' = f(x, u(s, x)) sampled at RK4 step endpoints.
 *
 * Each step also carries a cubic-Hermite midpoint state (fourth-order
 * accurate) so that quantities along the path can be integrated with
 * composite Simpson.
 */
struct Trajectory
{
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<Vec> mid_states;
  std::vector<Vec> mid_controls;

  std::size_t steps() const { return mid_states.size(); }
};

/// RK4 with the field's time step (rounded so that steps end exactly at T).
/// Throws BlowUpError if the state becomes non-finite.
Trajectory integrate_flow(const ControlProblem &problem, const GridField &u, double t,
                          const Vec &y);

/// Composite Simpson of integrand(s, x, u) along the path.
double integrate_along(const Trajectory &traj,
                       const std::function<double(double, const Vec &, const Vec &)> &integrand);

/// int_t^T F(x, u) ds + g(x(T)) for the path already integrated. Throws
/// BlowUpError if the value is not finite.
double trajectory_cost(const ControlProblem &problem, const Trajectory &traj);

/// I(u; t, y).
double cost_functional(const ControlProblem &problem, const GridField &u, double t, const Vec &y);

/// Initial condition (t, y) of one member of an ensemble.
struct Sample
{
  double t = 0.0;
  Vec y;
};

/// Tensor lattice of initial states in [lo, hi] at a single initial time.
std::vector<Sample> lattice_samples(double t, const Vec &lo, const Vec &hi,
                                    const std::vector<int> &points);

/// Mean of I(u; t_i, y_i). The per-sample costs are reduced in sample order,
/// so the value does not depend on the worker count.
double ensemble_objective(const ControlProblem &problem, const GridField &u,
                          const std::vector<Sample> &samples, int workers = 1);

/// `s,x1..xN,u1..um` rows at the step endpoints.
CsvTable trajectory_table(const Trajectory &traj);

} // namespace feedsynth

#endif // FEEDSYNTH_FLOW_HPP_
