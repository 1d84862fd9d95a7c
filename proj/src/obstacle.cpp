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

#include "feedsynth/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feedsynth/errors.hpp"

namespace feedsynth
{

namespace
{

// Coupling of node `node` to each existing neighbour, written through the
// callback as (neighbour index, coefficient). Coefficients are 1/h^2 inside
// and 2/h^2 towards the interior from a face node.
template <class Fn>
void for_each_neighbour(const Grid &grid, std::size_t node, Fn &&fn)
{
  for (int d = 0; d < grid.dim(); ++d)
  {
    const int i = grid.axis_index(node, d);
    const int n = grid.nodes(d);
    const double c = 1.0 / (grid.axis_weight(d, i) * grid.spacing(d));
    const std::size_t s = grid.stride(d);
    if (i > 0)
      fn(node - s, c);
    if (i < n - 1)
      fn(node + s, c);
  }
}

void check_size(const Grid &grid, std::span<const double> a, int components, const char *name)
{
  if (a.size() != grid.node_count() * static_cast<std::size_t>(components))
  {
    std::ostringstream os;
    os << name << " has " << a.size() << " entries, expected "
       << grid.node_count() * components;
    throw InvalidArgument(os.str());
  }
}

} // namespace

void apply_neumann_laplacian(const Grid &grid, std::span<const double> W, int components,
                             std::span<double> out)
{
  check_size(grid, W, components, "W");
  check_size(grid, out, components, "out");
  const std::size_t m = components;
  for (std::size_t node = 0; node < grid.node_count(); ++node)
  {
    for (std::size_t c = 0; c < m; ++c)
      out[node * m + c] = 0.0;
    for_each_neighbour(grid, node, [&](std::size_t j, double coef) {
      for (std::size_t c = 0; c < m; ++c)
        out[node * m + c] += coef * (W[j * m + c] - W[node * m + c]);
    });
  }
}

double dirichlet_energy(const Grid &grid, std::span<const double> W, int components)
{
  check_size(grid, W, components, "W");
  const std::size_t m = components;
  double total = 0.0;
  for (std::size_t node = 0; node < grid.node_count(); ++node)
  {
    const double w = grid.quadrature_weight(node);
    for_each_neighbour(grid, node, [&](std::size_t j, double coef) {
      if (j < node)
        return;
      // Edge weight is symmetric: w_i * coef(i->j) == w_j * coef(j->i).
      for (std::size_t c = 0; c < m; ++c)
      {
        const double diff = W[j * m + c] - W[node * m + c];
        total += w * coef * diff * diff;
      }
    });
  }
  return total;
}

double weighted_inner(const Grid &grid, std::span<const double> a, std::span<const double> b,
                      int components)
{
  check_size(grid, a, components, "a");
  check_size(grid, b, components, "b");
  const std::size_t m = components;
  double total = 0.0;
  for (std::size_t node = 0; node < grid.node_count(); ++node)
  {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c)
      s += a[node * m + c] * b[node * m + c];
    total += grid.quadrature_weight(node) * s;
  }
  return total;
}

double descent_inner_product(const Grid &grid, std::span<const double> grad_I,
                             std::span<const double> U, std::span<const double> u,
                             int components)
{
  check_size(grid, grad_I, components, "grad_I");
  check_size(grid, U, components, "U");
  check_size(grid, u, components, "u");
  const std::size_t m = components;
  double total = 0.0;
  for (std::size_t node = 0; node < grid.node_count(); ++node)
  {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c)
      s += grad_I[node * m + c] * (U[node * m + c] - u[node * m + c]);
    total += grid.quadrature_weight(node) * s;
  }
  return total;
}

ObstacleSolution solve_obstacle_slice(const Grid &grid, std::span<const double> grad_I,
                                      std::span<const double> u, const ConstraintSet &constraint,
                                      const ObstacleOptions &options,
                                      std::span<const double> initial_W)
{
  const int components = constraint.dim();
  check_size(grid, grad_I, components, "grad_I");
  check_size(grid, u, components, "u");
  if (!(options.relaxation > 0.0 && options.relaxation < 2.0))
    throw InvalidArgument("relaxation must lie in (0, 2)");
  if (!(options.tol > 0.0) || options.max_iter < 1)
    throw InvalidArgument("obstacle tolerance and iteration cap must be positive");

  const std::size_t m = components;
  const std::size_t n = grid.node_count();
  for (std::size_t node = 0; node < n; ++node)
    if (!constraint.contains(u.data() + node * m))
      throw InvalidArgument("base control is not feasible at node " + std::to_string(node));

  std::vector<double> W(n * m, 0.0);
  if (!initial_W.empty())
  {
    check_size(grid, initial_W, components, "initial_W");
    std::copy(initial_W.begin(), initial_W.end(), W.begin());
  }

  // Without constraints the Neumann problem only sees the mean-free part of
  // grad I; the constant mode is removed as in poisson_direction.
  std::vector<double> g(grad_I.begin(), grad_I.end());
  std::vector<double> weight(n);
  double total_weight = 0.0;
  for (std::size_t node = 0; node < n; ++node)
  {
    weight[node] = grid.quadrature_weight(node);
    total_weight += weight[node];
  }
  const bool unbounded = !constraint.compact();
  if (unbounded)
    for (std::size_t c = 0; c < m; ++c)
    {
      double mean = 0.0;
      for (std::size_t node = 0; node < n; ++node)
        mean += weight[node] * g[node * m + c];
      mean /= total_weight;
      for (std::size_t node = 0; node < n; ++node)
        g[node * m + c] -= mean;
    }

  std::vector<double> diag(n, 0.0);
  for (std::size_t node = 0; node < n; ++node)
    for_each_neighbour(grid, node, [&](std::size_t, double coef) { diag[node] += coef; });

  // Make the starting point feasible.
  std::vector<double> U(m), old(m), acc(m);
  for (std::size_t node = 0; node < n; ++node)
  {
    for (std::size_t c = 0; c < m; ++c)
      U[c] = u[node * m + c] + W[node * m + c];
    constraint.project_inplace(U.data());
    for (std::size_t c = 0; c < m; ++c)
      W[node * m + c] = U[c] - u[node * m + c];
  }

  const double omega = options.relaxation;
  ObstacleSolution result;
  double change = 0.0;
  int sweep = 0;
  for (sweep = 1; sweep <= options.max_iter; ++sweep)
  {
    change = 0.0;
    for (std::size_t node = 0; node < n; ++node)
    {
      for (std::size_t c = 0; c < m; ++c)
      {
        acc[c] = -g[node * m + c];
        old[c] = W[node * m + c];
      }
      for_each_neighbour(grid, node, [&](std::size_t j, double coef) {
        for (std::size_t c = 0; c < m; ++c)
          acc[c] += coef * W[j * m + c];
      });
      for (std::size_t c = 0; c < m; ++c)
      {
        const double gs = acc[c] / diag[node];
        U[c] = u[node * m + c] + old[c] + omega * (gs - old[c]);
      }
      constraint.project_inplace(U.data());
      for (std::size_t c = 0; c < m; ++c)
      {
        const double w_new = U[c] - u[node * m + c];
        change = std::max(change, std::abs(w_new - old[c]));
        W[node * m + c] = w_new;
      }
    }
    if (!std::isfinite(change))
      throw ConvergenceError("obstacle iteration produced a non-finite value", change, sweep);
    if (change < options.tol)
      break;
  }
  if (sweep > options.max_iter)
  {
    std::ostringstream os;
    os << "obstacle solver did not converge in " << options.max_iter
       << " sweeps (last change " << change << ")";
    throw ConvergenceError(os.str(), change, options.max_iter);
  }

  if (unbounded)
    for (std::size_t c = 0; c < m; ++c)
    {
      double mean = 0.0;
      for (std::size_t node = 0; node < n; ++node)
        mean += weight[node] * W[node * m + c];
      mean /= total_weight;
      for (std::size_t node = 0; node < n; ++node)
        W[node * m + c] -= mean;
    }

  result.iterations = sweep;
  result.residual = change;
  result.U.resize(n * m);
  for (std::size_t k = 0; k < n * m; ++k)
    result.U[k] = u[k] + W[k];
  result.descent_inner = descent_inner_product(grid, grad_I, result.U, u, components);
  return result;
}

double complementarity_residual(const Grid &grid, std::span<const double> grad_I,
                                std::span<const double> u, std::span<const double> U,
                                const ConstraintSet &constraint)
{
  const int components = constraint.dim();
  check_size(grid, grad_I, components, "grad_I");
  check_size(grid, u, components, "u");
  check_size(grid, U, components, "U");
  const std::size_t m = components;
  const std::size_t n = grid.node_count();

  std::vector<double> W(n * m), lap(n * m);
  for (std::size_t k = 0; k < n * m; ++k)
    W[k] = U[k] - u[k];
  apply_neumann_laplacian(grid, W, components, lap);

  constexpr double kBoundaryTol = 1e-12;
  double worst = 0.0;
  std::vector<double> r(m);
  for (std::size_t node = 0; node < n; ++node)
  {
    for (std::size_t c = 0; c < m; ++c)
      r[c] = grad_I[node * m + c] - lap[node * m + c];
    const double *x = U.data() + node * m;
    switch (constraint.kind())
    {
    case ConstraintSet::Kind::kUnconstrained:
      for (std::size_t c = 0; c < m; ++c)
        worst = std::max(worst, std::abs(r[c]));
      break;
    case ConstraintSet::Kind::kBox:
      for (std::size_t c = 0; c < m; ++c)
      {
        const double lo = constraint.lo()[c], hi = constraint.hi()[c];
        const double slack = kBoundaryTol * std::max(1.0, hi - lo);
        double v;
        if (x[c] <= lo + slack)
          v = std::max(0.0, -r[c]);
        else if (x[c] >= hi - slack)
          v = std::max(0.0, r[c]);
        else
          v = std::abs(r[c]);
        worst = std::max(worst, v);
      }
      break;
    case ConstraintSet::Kind::kBall:
    {
      double dist2 = 0.0;
      for (std::size_t c = 0; c < m; ++c)
      {
        const double d = x[c] - constraint.center()[c];
        dist2 += d * d;
      }
      const double dist = std::sqrt(dist2);
      const double R = constraint.radius();
      if (dist >= R * (1.0 - kBoundaryTol) && dist > 0.0)
      {
        // r must equal -lambda * normal with lambda >= 0.
        double rn = 0.0;
        for (std::size_t c = 0; c < m; ++c)
          rn += r[c] * (x[c] - constraint.center()[c]) / dist;
        double tang = 0.0;
        for (std::size_t c = 0; c < m; ++c)
        {
          const double t = r[c] - rn * (x[c] - constraint.center()[c]) / dist;
          tang += t * t;
        }
        worst = std::max(worst, std::sqrt(tang) + std::max(0.0, rn));
      }
      else
      {
        for (std::size_t c = 0; c < m; ++c)
          worst = std::max(worst, std::abs(r[c]));
      }
      break;
    }
    }
  }
  return worst;
}

PoissonSolution poisson_direction(const Grid &grid, std::span<const double> grad_I,
                                  int components, const PoissonOptions &options)
{
  if (components < 1)
    throw InvalidArgument("components must be positive");
  check_size(grid, grad_I, components, "grad_I");
  const std::size_t m = components;
  const std::size_t n = grid.node_count();
  const int max_iter =
      options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * n + 100);

  std::vector<double> weight(n);
  double total_weight = 0.0;
  for (std::size_t node = 0; node < n; ++node)
  {
    weight[node] = grid.quadrature_weight(node);
    total_weight += weight[node];
  }

  // Operator A = -M Lap is symmetric positive semidefinite with kernel = constants.
  auto apply_A = [&](const std::vector<double> &x, std::vector<double> &y) {
    for (std::size_t node = 0; node < n; ++node)
    {
      double s = 0.0;
      for_each_neighbour(grid, node, [&](std::size_t j, double coef) {
        s += coef * (x[node] - x[j]);
      });
      y[node] = weight[node] * s;
    }
  };

  PoissonSolution result;
  result.U.assign(n * m, 0.0);
  result.removed_mean.assign(m, 0.0);

  std::vector<double> x(n), b(n), r(n), p(n), Ap(n);
  for (std::size_t c = 0; c < m; ++c)
  {
    double mean = 0.0;
    for (std::size_t node = 0; node < n; ++node)
      mean += weight[node] * grad_I[node * m + c];
    mean /= total_weight;
    result.removed_mean[c] = mean;

    // Lap U = g - mean  <=>  A U = -M (g - mean).
    double bnorm2 = 0.0;
    for (std::size_t node = 0; node < n; ++node)
    {
      b[node] = -weight[node] * (grad_I[node * m + c] - mean);
      bnorm2 += b[node] * b[node];
    }
    std::fill(x.begin(), x.end(), 0.0);
    const double bnorm = std::sqrt(bnorm2);
    if (bnorm == 0.0)
      continue;

    r = b;
    p = r;
    double rr = bnorm2;
    int it = 0;
    double rel = 1.0;
    while (rel > options.tol)
    {
      if (it >= max_iter)
      {
        std::ostringstream os;
        os << "conjugate gradients stalled at relative residual " << rel << " after " << it
           << " iterations";
        throw ConvergenceError(os.str(), rel, it);
      }
      apply_A(p, Ap);
      double pAp = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        pAp += p[k] * Ap[k];
      if (!(pAp > 0.0))
        break;
      const double alpha = rr / pAp;
      double rr_new = 0.0;
      for (std::size_t k = 0; k < n; ++k)
      {
        x[k] += alpha * p[k];
        r[k] -= alpha * Ap[k];
        rr_new += r[k] * r[k];
      }
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t k = 0; k < n; ++k)
        p[k] = r[k] + beta * p[k];
      ++it;
      rel = std::sqrt(rr) / bnorm;
    }

    double xm = 0.0;
    for (std::size_t node = 0; node < n; ++node)
      xm += weight[node] * x[node];
    xm /= total_weight;
    for (std::size_t node = 0; node < n; ++node)
      result.U[node * m + c] = x[node] - xm;
    result.iterations = std::max(result.iterations, it);
    result.residual = std::max(result.residual, rel);
  }
  return result;
}

} // namespace feedsynth
