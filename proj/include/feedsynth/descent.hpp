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

#ifndef FEEDSYNTH_DESCENT_HPP_
#define FEEDSYNTH_DESCENT_HPP_

#include <functional>
#include <string>
#include <vector>

#include "feedsynth/costate.hpp"
#include "feedsynth/flow.hpp"
#include "feedsynth/grid.hpp"
#include "feedsynth/obstacle.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

/// grad I(u)(t, x) = F_u(x, u) - p f_u(x, u) at every node (m components).
GridField gradient_field(const ControlProblem &problem, const GridField &u, const GridField &p,
                         int workers = 1);

/// Nodes whose coordinates lie in [lo, hi]; empty bounds select every node.
std::vector<std::size_t> nodes_in_box(const Grid &grid, const Vec &lo, const Vec &hi);

/**
 * Largest node norm over the given nodes and all slices of grad I when K is
 * unbounded, or of u - P_K(u - grad I) otherwise.
 */
double stationarity_residual(const ControlProblem &problem, const GridField &u,
                             const GridField &grad, const std::vector<std::size_t> &nodes);

/// mean over samples of int grad I . D ds along the closed-loop paths of u.
double adjoint_directional_derivative(const ControlProblem &problem, const GridField &u,
                                      const GridField &grad, const GridField &direction,
                                      const std::vector<Sample> &samples, int workers = 1);

struct DerivativeCheck
{
  /// Derivatives of the ensemble objective (mean over the non-skipped samples).
  double fd_value = 0.0;
  double adjoint_value = 0.0;
  /// |fd - adjoint| / max(|fd|, |adjoint|); 0 when both vanish.
  double rel_err = 0.0;

  std::vector<double> fd_values;
  std::vector<double> adjoint_values;
  /// Samples whose perturbed flow blew up; their entries are NaN.
  std::vector<bool> skipped;
  /// max over samples of |fd - adjoint| / scale, where scale is the larger of
  /// |fd|, |adjoint| and 1e-3 times the largest |adjoint| over all samples.
  /// Samples with tiny derivatives make this a discretization-error probe
  /// rather than a correctness test.
  double worst_sample_rel_err = 0.0;
};

/// Central differences (I(u + eD) - I(u - eD)) / 2e against the adjoint
/// integral, for the ensemble and sample by sample.
DerivativeCheck directional_derivative_check(const ControlProblem &problem, const GridField &u,
                                             const GridField &direction,
                                             const std::vector<Sample> &samples, double eps_fd,
                                             int workers = 1);

/// Sum of Gaussian bumps amp * exp(-|x - c|^2 / (2 w^2)) * sin(pi (t - t0) / (T - t0))
/// per component, with centres, widths and amplitudes drawn from `seed`.
GridField gaussian_bump_field(const Grid &grid, const TimeGrid &time_grid, int components,
                              unsigned seed, int bumps = 3);

enum class DirectionMode
{
  kObstacle,
  kPoisson,
  kPointwise,
};

std::string to_string(DirectionMode mode);
DirectionMode direction_mode_from_string(const std::string &name);

struct IterationRecord
{
  int iter = 0;
  double objective = 0.0;
  /// Step that produced this iterate (0 for the initial field).
  double eps = 0.0;
  /// Time integral of the per-slice descent inner products of that step.
  double descent_inner = 0.0;
  /// Largest per-slice descent inner product of that step.
  double max_slice_inner = 0.0;
  double residual = 0.0;
  double seconds = 0.0;
};

enum class DescentStatus
{
  kConverged,
  kStalled,
  kMaxIterations,
};

std::string to_string(DescentStatus status);

struct DescentConfig
{
  DirectionMode mode = DirectionMode::kPoisson;
  /// Initial conditions whose mean cost is minimised.
  std::vector<Sample> samples;
  /// Region where the stationarity residual is measured; empty means the
  /// whole grid.
  Vec measure_lo, measure_hi;
  double tol = 1e-3;
  int max_iterations = 200;
  double eps_init = 1.0;
  double eps_min = 1e-8;
  /// Must not exceed 1 for the obstacle and pointwise modes.
  double eps_max = 1.0;
  double eps_growth = 2.0;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  ObstacleOptions obstacle;
  PoissonOptions poisson;
  int hamiltonian_resolution = 21;
  int workers = 1;
  /// Called after every recorded iterate.
  std::function<void(const IterationRecord &)> on_iteration;
};

struct DescentReport
{
  std::vector<IterationRecord> iterations;
  DescentStatus status = DescentStatus::kMaxIterations;
  double final_residual = 0.0;
  double final_objective = 0.0;
  double max_cfl = 0.0;
  std::string message;
};

struct DescentResult
{
  GridField u;
  GridField p;
  GridField grad;
  DescentReport report;
};

/// Throws InvalidArgument on inconsistent configuration and BlowUpError
/// when the current iterate cannot be evaluated.
DescentResult run_descent(const ControlProblem &problem, const DescentConfig &config,
                          const GridField &u0);

/// `iter,objective,eps,descent_inner,max_slice_inner,residual`; wall time
/// stays out so the file is reproducible.
CsvTable report_table(const DescentReport &report);

} // namespace feedsynth

#endif // FEEDSYNTH_DESCENT_HPP_
