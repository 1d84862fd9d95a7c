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

#ifndef FEEDSYNTH_OBSTACLE_HPP_
#define FEEDSYNTH_OBSTACLE_HPP_

#include <span>
#include <vector>

#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

// Slice arrays below are laid out (node, component), like GridField slices.
//
// The discrete Dirichlet energy is the lumped bilinear form whose Euler
// equation is the 2*dim+1 point Laplacian with homogeneous Neumann faces
// (ghost reflection). It is self-adjoint for the trapezoidal node weights,
// which makes grid quadrature of grad I * W equal to minus the energy for the
// Poisson direction.

/// Neumann Laplacian (per component) applied to W.
void apply_neumann_laplacian(const Grid &grid, std::span<const double> W, int components,
                             std::span<double> out);

/// Sum over edges of weighted squared differences: the grid version of
/// int |grad W|^2 dx.
double dirichlet_energy(const Grid &grid, std::span<const double> W, int components);

/// Trapezoidal quadrature of sum_c a_c b_c.
double weighted_inner(const Grid &grid, std::span<const double> a, std::span<const double> b,
                      int components);

/// Grid quadrature of grad I . (U - u) over one slice.
double descent_inner_product(const Grid &grid, std::span<const double> grad_I,
                             std::span<const double> U, std::span<const double> u,
                             int components);

struct ObstacleOptions
{
  /// Stop once the largest nodal change in a sweep is below this.
  double tol = 1e-10;
  int max_iter = 200000;
  /// 1 is plain projected Gauss-Seidel; values in (1, 2) over-relax.
  double relaxation = 1.0;
};

struct ObstacleSolution
{
  std::vector<double> U;
  int iterations = 0;
  /// Largest nodal change in the final sweep.
  double residual = 0.0;
  /// Grid quadrature of grad I . (U - u).
  double descent_inner = 0.0;
};

/**
 * @brief Per-slice obstacle problem
 *
 *   minimize over U in K:  int 1/2 |grad U - grad u|^2 + grad I . (U - u) dx
 *
 * by projected Gauss-Seidel on W = U - u. Box sets project componentwise;
 * ball sets project the m-vector of a node jointly (the block Hessian is a
 * multiple of the identity, so this is the exact block minimizer). `u` must
 * be feasible. For unbounded K the mean of grad I is removed and U - u is
 * returned with zero weighted mean, matching poisson_direction. `initial_W`,
 * when non-empty, warm-starts the sweep.
 *
 * Throws ConvergenceError with the last residual when max_iter is reached.
 */
ObstacleSolution solve_obstacle_slice(const Grid &grid, std::span<const double> grad_I,
                                      std::span<const double> u, const ConstraintSet &constraint,
                                      const ObstacleOptions &options = {},
                                      std::span<const double> initial_W = {});

/**
 * Largest violation of the discrete variational inequality: the stencil
 * residual r = grad I - Lap(U - u) must vanish where U is inside K and point
 * outward (r opposite to the outward normal) where U is on the boundary.
 */
double complementarity_residual(const Grid &grid, std::span<const double> grad_I,
                                std::span<const double> u, std::span<const double> U,
                                const ConstraintSet &constraint);

struct PoissonOptions
{
  /// Relative residual ||A U - b|| / ||b|| at which CG stops.
  double tol = 1e-12;
  /// 0 selects 10 * node count + 100.
  int max_iter = 0;
};

struct PoissonSolution
{
  std::vector<double> U;
  int iterations = 0;
  double residual = 0.0;
  /// Weighted mean of each component of grad I, removed to make the Neumann
  /// problem solvable. These constant modes are invisible to the direction.
  std::vector<double> removed_mean;
};

/**
 * Unconstrained direction: Lap U = grad I - mean(grad I) with homogeneous
 * Neumann faces, solved by conjugate gradients; U has zero weighted mean.
 * Throws ConvergenceError if CG does not reach the tolerance.
 */
PoissonSolution poisson_direction(const Grid &grid, std::span<const double> grad_I,
                                  int components, const PoissonOptions &options = {});

} // namespace feedsynth

#endif // FEEDSYNTH_OBSTACLE_HPP_
