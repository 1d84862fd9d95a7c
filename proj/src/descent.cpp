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

#include "feedsynth/descent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "feedsynth/errors.hpp"
#include "feedsynth/oracles.hpp"
#include "feedsynth/parallel.hpp"

namespace feedsynth
{

GridField gradient_field(const ControlProblem &problem, const GridField &u, const GridField &p,
                         int workers)
{
  if (!(u.grid() == p.grid()) || !(u.time_grid() == p.time_grid()))
    throw InvalidArgument("feedback and costate live on different grids");
  const Grid &grid = u.grid();
  const int m = u.components();
  GridField grad(grid, u.time_grid(), m);
  const std::size_t nodes = grid.node_count();
  parallel_for(static_cast<std::size_t>(u.slices()) * nodes, workers, [&](std::size_t idx) {
    const int k = static_cast<int>(idx / nodes);
    const std::size_t node = idx % nodes;
    const Vec x = grid.node(node);
    const Vec uk = u.value(k, node);
    const Vec pk = p.value(k, node);
    const Vec g = problem.running_cost_grad_u(x, uk) -
                  problem.dynamics_jac_u(x, uk).transpose() * pk;
    for (int c = 0; c < m; ++c)
      grad(k, node, c) = g[c];
  });
  return grad;
}

std::vector<std::size_t> nodes_in_box(const Grid &grid, const Vec &lo, const Vec &hi)
{
  std::vector<std::size_t> out;
  const bool all = lo.size() == 0 && hi.size() == 0;
  if (!all && (lo.size() != grid.dim() || hi.size() != grid.dim()))
    throw InvalidArgument("measure box dimension does not match the grid");
  Vec x(grid.dim());
  for (std::size_t node = 0; node < grid.node_count(); ++node)
  {
    grid.node_into(node, x.data());
    bool inside = true;
    for (int d = 0; d < grid.dim() && !all; ++d)
      inside = inside && x[d] >= lo[d] - 1e-12 && x[d] <= hi[d] + 1e-12;
    if (inside)
      out.push_back(node);
  }
  if (out.empty())
    throw InvalidArgument("measure box contains no grid node");
  return out;
}

double stationarity_residual(const ControlProblem &problem, const GridField &u,
                             const GridField &grad, const std::vector<std::size_t> &nodes)
{
  const ConstraintSet &K = problem.constraint;
  const int m = u.components();
  double worst = 0.0;
  Vec v(m);
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t node : nodes)
    {
      double norm2 = 0.0;
      if (!K.compact())
      {
        for (int c = 0; c < m; ++c)
          norm2 += grad(k, node, c) * grad(k, node, c);
      }
      else
      {
        for (int c = 0; c < m; ++c)
          v[c] = u(k, node, c) - grad(k, node, c);
        K.project_inplace(v.data());
        for (int c = 0; c < m; ++c)
        {
          const double d = u(k, node, c) - v[c];
          norm2 += d * d;
        }
      }
      worst = std::max(worst, std::sqrt(norm2));
    }
  return worst;
}

namespace
{

double path_inner(const ControlProblem &problem, const GridField &u, const GridField &grad,
                  const GridField &direction, const Sample &s)
{
  const Trajectory traj = integrate_flow(problem, u, s.t, s.y);
  const int m = u.components();
  std::vector<double> g(m), d(m);
  return integrate_along(traj, [&](double t, const Vec &x, const Vec &) {
    grad.interpolate(t, x.data(), g.data());
    direction.interpolate(t, x.data(), d.data());
    double acc = 0.0;
    for (int c = 0; c < m; ++c)
      acc += g[c] * d[c];
    return acc;
  });
}

GridField axpy(const GridField &u, double a, const GridField &d)
{
  GridField out = u;
  auto &v = out.data();
  const auto &w = d.data();
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] += a * w[i];
  return out;
}

} // namespace

double adjoint_directional_derivative(const ControlProblem &problem, const GridField &u,
                                      const GridField &grad, const GridField &direction,
                                      const std::vector<Sample> &samples, int workers)
{
  if (samples.empty())
    throw InvalidArgument("no samples");
  std::vector<double> values(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    values[i] = path_inner(problem, u, grad, direction, samples[i]);
  });
  double total = 0.0;
  for (double v : values)
    total += v;
  return total / static_cast<double>(samples.size());
}

DerivativeCheck directional_derivative_check(const ControlProblem &problem, const GridField &u,
                                             const GridField &direction,
                                             const std::vector<Sample> &samples, double eps_fd,
                                             int workers)
{
  if (!(eps_fd > 0.0))
    throw InvalidArgument("finite-difference step must be positive");
  if (!u.same_layout(direction))
    throw InvalidArgument("direction and feedback have different layouts");
  const CostateSolution cs = solve_costate(problem, u, {workers});
  const GridField grad = gradient_field(problem, u, cs.p, workers);
  const GridField up = axpy(u, eps_fd, direction);
  const GridField um = axpy(u, -eps_fd, direction);

  const std::size_t n = samples.size();
  DerivativeCheck out;
  out.fd_values.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.adjoint_values.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.skipped.assign(n, false);
  parallel_for(n, workers, [&](std::size_t i) {
    const Sample &s = samples[i];
    try
    {
      const double ip = cost_functional(problem, up, s.t, s.y);
      const double im = cost_functional(problem, um, s.t, s.y);
      out.fd_values[i] = (ip - im) / (2.0 * eps_fd);
      out.adjoint_values[i] = path_inner(problem, u, grad, direction, s);
    }
    catch (const BlowUpError &)
    {
      out.skipped[i] = true;
    }
  });

  double peak = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!out.skipped[i])
    {
      peak = std::max(peak, std::abs(out.adjoint_values[i]));
      out.fd_value += out.fd_values[i];
      out.adjoint_value += out.adjoint_values[i];
      ++used;
    }
  if (used > 0)
  {
    out.fd_value /= static_cast<double>(used);
    out.adjoint_value /= static_cast<double>(used);
  }
  const double scale = std::max(std::abs(out.fd_value), std::abs(out.adjoint_value));
  if (scale > 0.0)
    out.rel_err = std::abs(out.fd_value - out.adjoint_value) / scale;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (out.skipped[i])
      continue;
    const double fd = out.fd_values[i], ad = out.adjoint_values[i];
    const double scale = std::max({std::abs(fd), std::abs(ad), 1e-3 * peak});
    if (scale > 0.0)
      out.worst_sample_rel_err = std::max(out.worst_sample_rel_err, std::abs(fd - ad) / scale);
  }
  return out;
}

GridField gaussian_bump_field(const Grid &grid, const TimeGrid &time_grid, int components,
                              unsigned seed, int bumps)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int N = grid.dim();
  struct Bump
  {
    Vec centre;
    double width, amp;
  };
  std::vector<std::vector<Bump>> all(components);
  for (int c = 0; c < components; ++c)
    for (int b = 0; b < bumps; ++b)
    {
      Bump bump{Vec(N), 0.0, 0.0};
      double extent = std::numeric_limits<double>::infinity();
      for (int d = 0; d < N; ++d)
      {
        const double lo = grid.lo()[d], hi = grid.hi()[d];
        bump.centre[d] = lo + (0.25 + 0.5 * unit(rng)) * (hi - lo);
        extent = std::min(extent, hi - lo);
      }
      bump.width = (0.08 + 0.12 * unit(rng)) * extent;
      bump.amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.5 * unit(rng));
      all[c].push_back(bump);
    }

  GridField field(grid, time_grid, components);
  const double t0 = time_grid.t0(), T = time_grid.t1();
  Vec x(N);
  for (int k = 0; k < field.slices(); ++k)
  {
    const double envelope = std::sin(M_PI * (time_grid.time(k) - t0) / (T - t0));
    for (std::size_t node = 0; node < grid.node_count(); ++node)
    {
      grid.node_into(node, x.data());
      for (int c = 0; c < components; ++c)
      {
        double v = 0.0;
        for (const Bump &b : all[c])
          v += b.amp * std::exp(-(x - b.centre).squaredNorm() / (2.0 * b.width * b.width));
        field(k, node, c) = envelope * v;
      }
    }
  }
  return field;
}

std::string to_string(DirectionMode mode)
{
  switch (mode)
  {
  case DirectionMode::kObstacle:
    return "obstacle";
  case DirectionMode::kPoisson:
    return "poisson";
  case DirectionMode::kPointwise:
    return "pointwise";
  }
  return "unknown";
}

DirectionMode direction_mode_from_string(const std::string &name)
{
  if (name == "obstacle")
    return DirectionMode::kObstacle;
  if (name == "poisson")
    return DirectionMode::kPoisson;
  if (name == "pointwise")
    return DirectionMode::kPointwise;
  throw InvalidArgument("unknown direction mode '" + name + "'");
}

std::string to_string(DescentStatus status)
{
  switch (status)
  {
  case DescentStatus::kConverged:
    return "converged";
  case DescentStatus::kStalled:
    return "stalled";
  case DescentStatus::kMaxIterations:
    return "max_iterations";
  }
  return "unknown";
}

namespace
{

struct Direction
{
  GridField d;               // step direction (U - u or U)
  std::vector<double> inner; // per-slice quadrature of grad I . d
};

Direction compute_direction(const ControlProblem &problem, const DescentConfig &config,
                            const GridField &u, const GridField &p, const GridField &grad)
{
  const Grid &grid = u.grid();
  const int m = u.components();
  const std::size_t size = u.slice_size();
  Direction out{GridField(grid, u.time_grid(), m), std::vector<double>(u.slices(), 0.0)};
  const ConstraintSet &K = problem.constraint;

  parallel_for(static_cast<std::size_t>(u.slices()), config.workers, [&](std::size_t ks) {
    const int k = static_cast<int>(ks);
    const std::span<const double> g(grad.slice(k), size);
    const std::span<const double> uk(u.slice(k), size);
    double *dk = out.d.slice(k);
    switch (config.mode)
    {
    case DirectionMode::kPoisson:
    {
      const PoissonSolution sol = poisson_direction(grid, g, m, config.poisson);
      std::copy(sol.U.begin(), sol.U.end(), dk);
      out.inner[k] = weighted_inner(grid, g, sol.U, m);
      break;
    }
    case DirectionMode::kObstacle:
    {
      const ObstacleSolution sol = solve_obstacle_slice(grid, g, uk, K, config.obstacle);
      for (std::size_t i = 0; i < size; ++i)
        dk[i] = sol.U[i] - uk[i];
      out.inner[k] = sol.descent_inner;
      break;
    }
    case DirectionMode::kPointwise:
    {
      std::vector<double> U(size);
      Vec x(grid.dim());
      for (std::size_t node = 0; node < grid.node_count(); ++node)
      {
        grid.node_into(node, x.data());
        const HamiltonianResult h = hamiltonian_argmin(problem, p.value(k, node), x,
                                                       config.hamiltonian_resolution,
                                                       HamiltonianSign::kMinus);
        for (int c = 0; c < m; ++c)
          U[node * m + c] = h.u[c];
      }
      for (std::size_t i = 0; i < size; ++i)
        dk[i] = U[i] - uk[i];
      out.inner[k] = descent_inner_product(grid, g, U, uk, m);
      break;
    }
    }
  });
  return out;
}

void check_config(const ControlProblem &problem, const DescentConfig &config, const GridField &u0)
{
  if (config.samples.empty())
    throw InvalidArgument("descent needs at least one ensemble sample");
  if (u0.components() != problem.control_dim || u0.grid().dim() != problem.state_dim)
    throw InvalidArgument("initial field does not match the problem dimensions");
  if (config.mode == DirectionMode::kPoisson && problem.constraint.compact())
    throw InvalidArgument("poisson mode requires an unconstrained control set");
  if (config.mode != DirectionMode::kPoisson && config.eps_max > 1.0)
    throw InvalidArgument("eps_max must not exceed 1 for convex-combination updates");
  if (!(config.tol > 0.0) || !(config.eps_min > 0.0) || !(config.eps_init >= config.eps_min) ||
      !(config.eps_max >= config.eps_init) || !(config.eps_growth >= 1.0) ||
      !(config.armijo_c1 > 0.0 && config.armijo_c1 < 1.0) ||
      !(config.backtrack > 0.0 && config.backtrack < 1.0) || config.max_iterations < 0)
    throw InvalidArgument("inconsistent descent step-size settings");
  for (int k = 0; k < u0.slices(); ++k)
    for (std::size_t node = 0; node < u0.grid().node_count(); ++node)
      if (!problem.constraint.contains(u0.slice(k) + node * u0.components()))
        throw InvalidArgument("initial field leaves the control set");
}

} // namespace

DescentResult run_descent(const ControlProblem &problem, const DescentConfig &config,
                          const GridField &u0)
{
  check_config(problem, config, u0);
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&]() { return std::chrono::duration<double>(Clock::now() - start).count(); };

  const std::vector<std::size_t> measured =
      nodes_in_box(u0.grid(), config.measure_lo, config.measure_hi);
  const TimeGrid &tg = u0.time_grid();
  const ConstraintSet &K = problem.constraint;
  const bool convex_update = config.mode != DirectionMode::kPoisson;

  GridField u = u0;
  double J = ensemble_objective(problem, u, config.samples, config.workers);
  CostateSolution cs = solve_costate(problem, u, {config.workers});
  GridField grad = gradient_field(problem, u, cs.p, config.workers);

  DescentReport report;
  report.max_cfl = cs.max_cfl;
  IterationRecord rec;
  rec.iter = 0;
  rec.objective = J;
  rec.residual = stationarity_residual(problem, u, grad, measured);
  rec.seconds = elapsed();
  report.iterations.push_back(rec);
  if (config.on_iteration)
    config.on_iteration(rec);

  double eps_next = config.eps_init;
  for (int it = 1;; ++it)
  {
    const double residual = report.iterations.back().residual;
    if (residual <= config.tol)
    {
      report.status = DescentStatus::kConverged;
      break;
    }
    if (it > config.max_iterations)
    {
      report.status = DescentStatus::kMaxIterations;
      break;
    }

    const Direction dir = compute_direction(problem, config, u, cs.p, grad);
    double inner = 0.0, max_inner = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < u.slices(); ++k)
    {
      const double w = (k == 0 || k == tg.steps()) ? 0.5 * tg.dt() : tg.dt();
      inner += w * dir.inner[k];
      max_inner = std::max(max_inner, dir.inner[k]);
    }
    const double slope =
        adjoint_directional_derivative(problem, u, grad, dir.d, config.samples, config.workers);

    bool accepted = false;
    double eps = eps_next;
    GridField trial = u;
    double J_trial = J;
    while (eps >= config.eps_min)
    {
      trial = axpy(u, eps, dir.d);
      if (convex_update && K.compact())
      {
        const std::size_t m = trial.components();
        auto &v = trial.data();
        for (std::size_t i = 0; i < v.size(); i += m)
          K.project_inplace(v.data() + i);
      }
      try
      {
        J_trial = ensemble_objective(problem, trial, config.samples, config.workers);
      }
      catch (const BlowUpError &)
      {
        J_trial = std::numeric_limits<double>::infinity();
      }
      const bool ok = slope < 0.0 ? J_trial <= J + config.armijo_c1 * eps * slope
                                  : J_trial < J;
      if (ok && std::isfinite(J_trial))
      {
        accepted = true;
        break;
      }
      eps *= config.backtrack;
    }
    if (!accepted)
    {
      report.status = DescentStatus::kStalled;
      std::ostringstream os;
      os << "line search found no decrease above eps_min=" << config.eps_min
         << " (directional slope " << slope << ")";
      report.message = os.str();
      break;
    }

    u = std::move(trial);
    J = J_trial;
    cs = solve_costate(problem, u, {config.workers});
    grad = gradient_field(problem, u, cs.p, config.workers);
    report.max_cfl = std::max(report.max_cfl, cs.max_cfl);

    rec = IterationRecord{};
    rec.iter = it;
    rec.objective = J;
    rec.eps = eps;
    rec.descent_inner = inner;
    rec.max_slice_inner = max_inner;
    rec.residual = stationarity_residual(problem, u, grad, measured);
    rec.seconds = elapsed();
    report.iterations.push_back(rec);
    if (config.on_iteration)
      config.on_iteration(rec);
    eps_next = std::min(config.eps_max, eps * config.eps_growth);
  }

  report.final_residual = report.iterations.back().residual;
  report.final_objective = J;
  if (report.message.empty())
    report.message = to_string(report.status);
  return DescentResult{std::move(u), std::move(cs.p), std::move(grad), std::move(report)};
}

CsvTable report_table(const DescentReport &report)
{
  CsvTable table;
  table.header = {"iter", "objective", "eps", "descent_inner",
                  "max_slice_inner", "residual"};
  for (const IterationRecord &r : report.iterations)
    table.rows.push_back({static_cast<double>(r.iter), r.objective, r.eps, r.descent_inner,
                          r.max_slice_inner, r.residual});
  return table;
}

} // namespace feedsynth
