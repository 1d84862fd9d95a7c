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

#ifndef FEEDSYNTH_ORACLES_HPP_
#define FEEDSYNTH_ORACLES_HPP_

#include <functional>
#include <vector>

#include "feedsynth/flow.hpp"
#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

struct PhiResult
{
  /// +infinity when no admissible control produces velocity xi.
  double value = 0.0;
  Vec u;
  bool finite() const;
  /// Minimum over the control lattice, NaN when the scan was skipped.
  double brute_force_value = 0.0;
};

/**
 * phi(x, xi) = min { F(x, u) : u in K, f(x, u) = xi } for control-affine
 * dynamics f = a(x) + B(x) u. The fibre {u : B u = xi - a} is parametrised
 * by a particular solution and an SVD null-space basis. Quadratic F without
 * constraints is minimised in closed form; otherwise projected gradient runs
 * on the fibre intersected with K. With `resolution` > 0 the null-space
 * coordinates are also scanned on a lattice with that many points per axis.
 * Throws InvalidArgument when the dynamics are not affine in u.
 */
PhiResult phi_eval(const ControlProblem &problem, const Vec &x, const Vec &xi,
                   int resolution = 0);

enum class HamiltonianSign
{
  kPlus,  // F + p.f
  kMinus, // F - p.f, the convention used by the descent
};

struct HamiltonianResult
{
  double value = 0.0;
  Vec u;
};

/**
 * Minimises F(x, u) +/- p.f(x, u) over K: lattice scan with `resolution`
 * points per control axis (over [-1, 1]^m when K is unbounded) followed by
 * projected-gradient polishing. Throws InvalidArgument when the objective
 * appears unbounded below.
 */
HamiltonianResult hamiltonian_argmin(const ControlProblem &problem, const Vec &p, const Vec &x,
                                     int resolution = 21,
                                     HamiltonianSign sign = HamiltonianSign::kMinus);

/// Lattice of controls in K with `resolution` points per axis. Unbounded sets
/// use [box_lo, box_hi]; ball sets keep the lattice points inside the ball.
std::vector<Vec> control_lattice(const ConstraintSet &constraint, int resolution,
                                 double box_lo = -1.0, double box_hi = 1.0);

/// Largest gap between the pointwise Hamiltonian F - p.f at u(t, x) and its
/// minimum over K, across all nodes and slices.
double hamiltonian_gap(const ControlProblem &problem, const GridField &u, const GridField &p,
                       int resolution = 21);

struct DPValue
{
  GridField value;  // 1 component
  GridField policy; // m components
};

/**
 * Backward induction with explicit Euler transitions:
 *   v(T, x) = g(x),
 *   v(t_k, x) = min_u dt F(x, u) + v(t_{k+1}, clamp(x + dt f(x, u))).
 * The successor value is interpolated multilinearly. Ties go to the
 * lowest-index control. The terminal policy slice repeats the previous one.
 */
DPValue dp_solve(const ControlProblem &problem, const Grid &state_grid,
                 const std::vector<Vec> &controls, const TimeGrid &time_grid, int workers = 1);

/// Mean of v(t, y) over the samples.
double dp_mean_value(const DPValue &dp, const std::vector<Sample> &samples);

struct ConsistencyReport
{
  Trajectory trajectory;
  /// max over path nodes of |recorded control - reference(s, x(s))|.
  double max_deviation = 0.0;
  bool within_tolerance = false;
};

using FeedbackFunction = std::function<Vec(double, const Vec &)>;

/// Integrates the closed loop of `feedback` from (t, y) and compares the
/// recorded controls with `reference` along the same path.
ConsistencyReport open_loop_consistency(const ControlProblem &problem, const GridField &feedback,
                                        double t, const Vec &y, const FeedbackFunction &reference,
                                        double tol);

/// Reference given by the DP policy field.
ConsistencyReport open_loop_consistency(const ControlProblem &problem, const GridField &feedback,
                                        double t, const Vec &y, const DPValue &dp, double tol);

} // namespace feedsynth

#endif // FEEDSYNTH_ORACLES_HPP_
