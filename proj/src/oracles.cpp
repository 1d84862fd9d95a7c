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

#include "feedsynth/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>

#include "feedsynth/errors.hpp"
#include "feedsynth/parallel.hpp"

namespace feedsynth
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls fn(point) for each point of the tensor lattice of `resolution` points
// per axis over [lo, hi].
template <class Fn>
void scan_lattice(const Vec &lo, const Vec &hi, int resolution, Fn &&fn)
{
  const int k = static_cast<int>(lo.size());
  std::vector<int> idx(k, 0);
  Vec point(k);
  while (true)
  {
    for (int d = 0; d < k; ++d)
      point[d] = resolution == 1 ? 0.5 * (lo[d] + hi[d])
                 : idx[d] == resolution - 1
                     ? hi[d]
                     : lo[d] + idx[d] * (hi[d] - lo[d]) / (resolution - 1);
    fn(point);
    int d = k - 1;
    while (d >= 0 && ++idx[d] == resolution)
      idx[d--] = 0;
    if (d < 0)
      break;
  }
}

// Axis-aligned box containing K, or [box_lo, box_hi]^m when unbounded.
void bounding_box(const ConstraintSet &K, double box_lo, double box_hi, Vec &lo, Vec &hi)
{
  const int m = K.dim();
  switch (K.kind())
  {
  case ConstraintSet::Kind::kBox:
    lo = K.lo();
    hi = K.hi();
    break;
  case ConstraintSet::Kind::kBall:
    lo = K.center().array() - K.radius();
    hi = K.center().array() + K.radius();
    break;
  case ConstraintSet::Kind::kUnconstrained:
    lo = Vec::Constant(m, box_lo);
    hi = Vec::Constant(m, box_hi);
    break;
  }
}

// Projected gradient with Armijo backtracking. `project` maps onto the
// feasible set; returns the polished point.
template <class Obj, class Grad, class Proj>
Vec projected_gradient(const Obj &obj, const Grad &grad, const Proj &project, Vec u,
                       bool detect_unbounded)
{
  double alpha = 1.0;
  double fu = obj(u);
  for (int it = 0; it < 20000; ++it)
  {
    const Vec g = grad(u);
    bool accepted = false;
    Vec next;
    double fnext = fu;
    for (int bt = 0; bt < 60; ++bt)
    {
      next = project(Vec(u - alpha * g));
      fnext = obj(next);
      const double d2 = (next - u).squaredNorm();
      if (fnext <= fu - 1e-4 / alpha * d2)
      {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      return u;
    const double step = (next - u).norm();
    u = next;
    fu = fnext;
    if (detect_unbounded && u.norm() > 1e8)
      throw InvalidArgument("objective appears unbounded below over the control set");
    if (step <= 1e-13 * std::max(1.0, u.norm()))
      return u;
    alpha = std::min(alpha * 2.0, 1e6);
  }
  return u;
}

} // namespace

bool PhiResult::finite() const { return std::isfinite(value); }

PhiResult phi_eval(const ControlProblem &problem, const Vec &x, const Vec &xi, int resolution)
{
  const int N = problem.state_dim;
  const int m = problem.control_dim;
  if (x.size() != N || xi.size() != N)
    throw InvalidArgument("phi_eval: state or velocity has the wrong dimension");
  const ConstraintSet &K = problem.constraint;

  const Vec zero = Vec::Zero(m);
  const Vec a = problem.dynamics(x, zero);
  const Mat B = problem.dynamics_jac_u(x, zero);
  for (int trial = 0; trial < 2; ++trial)
  {
    Vec u(m);
    for (int j = 0; j < m; ++j)
      u[j] = (trial == 0 ? 1.0 : -0.7) * (1.0 + 0.3 * j);
    const Vec err = problem.dynamics(x, u) - a - B * u;
    const Mat jerr = problem.dynamics_jac_u(x, u) - B;
    if (err.norm() > 1e-9 * std::max(1.0, a.norm() + B.norm()) ||
        jerr.norm() > 1e-9 * std::max(1.0, B.norm()))
      throw InvalidArgument("phi_eval needs dynamics affine in the control");
  }

  PhiResult result;
  result.brute_force_value = std::numeric_limits<double>::quiet_NaN();
  const Vec r = xi - a;
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec &sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double rank_tol = std::max(N, m) * smax * 1e-13;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > rank_tol)
    ++rank;
  Vec u0 = Vec::Zero(m);
  {
    const Vec c = svd.matrixU().transpose() * r;
    for (int i = 0; i < rank; ++i)
      u0 += svd.matrixV().col(i) * (c[i] / sv[i]);
  }
  if ((B * u0 - r).norm() > 1e-9 * std::max(1.0, r.norm()))
  {
    result.value = kInf;
    return result;
  }
  const Mat Z = svd.matrixV().rightCols(m - rank);

  auto F = [&](const Vec &u) { return problem.running_cost(x, u); };
  auto Fu = [&](const Vec &u) -> Vec { return problem.running_cost_grad_u(x, u); };
  auto onto_fibre = [&](const Vec &v) -> Vec { return u0 + Z * (Z.transpose() * (v - u0)); };
  // Dykstra's alternating projection onto fibre and K.
  auto onto_feasible = [&](const Vec &v) -> Vec {
    if (!K.compact())
      return onto_fibre(v);
    Vec y = v, pA = Vec::Zero(m), qK = Vec::Zero(m);
    for (int it = 0; it < 5000; ++it)
    {
      const Vec ya = onto_fibre(Vec(y + pA));
      pA = y + pA - ya;
      const Vec yk = K.project(Vec(ya + qK));
      qK = ya + qK - yk;
      const double change = (yk - y).norm();
      y = yk;
      if (change <= 1e-15 * std::max(1.0, y.norm()))
        break;
    }
    return y;
  };

  Vec u;
  if (Z.cols() == 0)
  {
    u = u0;
    if (K.compact() && (K.project(u) - u).norm() > 1e-12 * std::max(1.0, u.norm()))
    {
      result.value = kInf;
      return result;
    }
    u = K.project(u);
  }
  else
  {
    bool closed_form = false;
    if (!K.compact())
    {
      // Hessian from unit central differences; exact when F is quadratic.
      Mat H(m, m);
      for (int j = 0; j < m; ++j)
      {
        Vec e = Vec::Zero(m);
        e[j] = 1.0;
        H.col(j) = 0.5 * (Fu(Vec(u0 + e)) - Fu(Vec(u0 - e)));
      }
      Vec w(m);
      for (int j = 0; j < m; ++j)
        w[j] = 0.37 + 0.11 * j;
      const Vec pred = Fu(u0) + H * w;
      const bool quadratic = (Fu(Vec(u0 + w)) - pred).norm() <= 1e-9 * std::max(1.0, pred.norm());
      const Mat ZHZ = Z.transpose() * H * Z;
      Eigen::LLT<Mat> llt(0.5 * (ZHZ + ZHZ.transpose()));
      if (quadratic && llt.info() == Eigen::Success)
      {
        u = u0 - Z * llt.solve(Vec(Z.transpose() * Fu(u0)));
        closed_form = true;
      }
    }
    if (!closed_form)
    {
      const Vec start = onto_feasible(u0);
      if ((B * start - r).norm() > 1e-8 * std::max(1.0, r.norm()))
      {
        result.value = kInf;
        return result;
      }
      auto proj_grad = [&](const Vec &v) -> Vec { return Z * (Z.transpose() * Fu(v)); };
      u = projected_gradient(F, proj_grad, onto_feasible, start, !K.compact());
    }
  }
  result.u = u;
  result.value = F(u);

  if (resolution > 0)
  {
    double best = kInf;
    if (Z.cols() == 0)
    {
      best = result.value;
    }
    else
    {
      double R;
      if (K.compact())
      {
        Vec lo, hi;
        bounding_box(K, -1.0, 1.0, lo, hi);
        R = (0.5 * (lo + hi) - u0).norm() + 0.5 * (hi - lo).norm();
      }
      else
      {
        R = 2.0 * (Z.transpose() * (u - u0)).norm() + 1.0;
      }
      const Vec zlo = Vec::Constant(Z.cols(), -R), zhi = Vec::Constant(Z.cols(), R);
      scan_lattice(zlo, zhi, resolution, [&](const Vec &z) {
        const Vec v = u0 + Z * z;
        if (K.compact() && !K.contains(v))
          return;
        best = std::min(best, F(v));
      });
    }
    result.brute_force_value = best;
  }
  return result;
}

std::vector<Vec> control_lattice(const ConstraintSet &constraint, int resolution, double box_lo,
                                 double box_hi)
{
  if (resolution < 1)
    throw InvalidArgument("control lattice resolution must be positive");
  Vec lo, hi;
  bounding_box(constraint, box_lo, box_hi, lo, hi);
  std::vector<Vec> out;
  scan_lattice(lo, hi, resolution, [&](const Vec &u) {
    if (constraint.kind() != ConstraintSet::Kind::kBall || constraint.contains(u))
      out.push_back(u);
  });
  if (constraint.kind() == ConstraintSet::Kind::kBall && out.empty())
    out.push_back(constraint.center());
  return out;
}

HamiltonianResult hamiltonian_argmin(const ControlProblem &problem, const Vec &p, const Vec &x,
                                     int resolution, HamiltonianSign sign)
{
  const double s = sign == HamiltonianSign::kPlus ? 1.0 : -1.0;
  const ConstraintSet &K = problem.constraint;
  auto obj = [&](const Vec &u) {
    return problem.running_cost(x, u) + s * p.dot(problem.dynamics(x, u));
  };
  auto grad = [&](const Vec &u) -> Vec {
    return problem.running_cost_grad_u(x, u) +
           s * problem.dynamics_jac_u(x, u).transpose() * p;
  };
  auto project = [&](const Vec &v) -> Vec { return K.project(v); };

  const std::vector<Vec> lattice = control_lattice(K, std::max(resolution, 1));
  Vec best = lattice.front();
  double best_val = obj(best);
  for (std::size_t i = 1; i < lattice.size(); ++i)
  {
    const double v = obj(lattice[i]);
    if (v < best_val)
    {
      best_val = v;
      best = lattice[i];
    }
  }
  HamiltonianResult result;
  result.u = projected_gradient(obj, grad, project, best, !K.compact());
  result.value = obj(result.u);
  return result;
}

double hamiltonian_gap(const ControlProblem &problem, const GridField &u, const GridField &p,
                       int resolution)
{
  if (u.grid() != p.grid() || !(u.time_grid() == p.time_grid()))
    throw InvalidArgument("feedback and costate live on different grids");
  const Grid &grid = u.grid();
  double worst = 0.0;
  Vec x(grid.dim());
  for (int k = 0; k < u.slices(); ++k)
    for (std::size_t node = 0; node < grid.node_count(); ++node)
    {
      grid.node_into(node, x.data());
      const Vec uk = u.value(k, node);
      const Vec pk = p.value(k, node);
      const double current =
          problem.running_cost(x, uk) - pk.dot(problem.dynamics(x, uk));
      const HamiltonianResult best =
          hamiltonian_argmin(problem, pk, x, resolution, HamiltonianSign::kMinus);
      worst = std::max(worst, current - best.value);
    }
  return worst;
}

DPValue dp_solve(const ControlProblem &problem, const Grid &state_grid,
                 const std::vector<Vec> &controls, const TimeGrid &time_grid, int workers)
{
  if (state_grid.dim() != problem.state_dim)
    throw InvalidArgument("state grid dimension does not match the problem");
  if (state_grid.dim() > 2)
    throw InvalidArgument("dynamic programming oracle supports at most two state dimensions");
  if (controls.empty())
    throw InvalidArgument("control lattice is empty");
  const int m = problem.control_dim;
  DPValue dp{GridField(state_grid, time_grid, 1), GridField(state_grid, time_grid, m)};
  const int last = time_grid.steps();
  const std::size_t nodes = state_grid.node_count();

  for (std::size_t node = 0; node < nodes; ++node)
    dp.value(last, node, 0) = problem.g(state_grid.node(node));

  for (int k = last - 1; k >= 0; --k)
  {
    const double *next = dp.value.slice(k + 1);
    const double tk = time_grid.time(k);
    const double step = time_grid.time(k + 1) - tk;
    parallel_for(nodes, workers, [&](std::size_t node) {
      const Vec x = state_grid.node(node);
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < controls.size(); ++j)
      {
        const Vec &u = controls[j];
        const Vec succ = state_grid.clamp(Vec(x + step * problem.dynamics(x, u)));
        double v_next;
        interpolate_slice_values(state_grid, next, 1, succ.data(), &v_next);
        const double total = step * problem.running_cost(x, u) + v_next;
        if (total < best)
        {
          best = total;
          arg = j;
        }
      }
      if (!std::isfinite(best))
        throw BlowUpError("dynamic programming produced a non-finite value", tk);
      dp.value(k, node, 0) = best;
      for (int c = 0; c < m; ++c)
        dp.policy(k, node, c) = controls[arg][c];
    });
  }
  for (std::size_t node = 0; node < nodes; ++node)
    for (int c = 0; c < m; ++c)
      dp.policy(last, node, c) = last > 0 ? dp.policy(last - 1, node, c) : controls[0][c];
  return dp;
}

double dp_mean_value(const DPValue &dp, const std::vector<Sample> &samples)
{
  if (samples.empty())
    throw InvalidArgument("no samples");
  double total = 0.0;
  for (const Sample &s : samples)
    total += dp.value.interpolate(s.t, s.y)[0];
  return total / static_cast<double>(samples.size());
}

ConsistencyReport open_loop_consistency(const ControlProblem &problem, const GridField &feedback,
                                        double t, const Vec &y, const FeedbackFunction &reference,
                                        double tol)
{
  ConsistencyReport report;
  report.trajectory = integrate_flow(problem, feedback, t, y);
  const Trajectory &traj = report.trajectory;
  for (std::size_t k = 0; k < traj.states.size(); ++k)
  {
    const Vec ref = reference(traj.times[k], traj.states[k]);
    report.max_deviation = std::max(report.max_deviation, (traj.controls[k] - ref).norm());
  }
  report.within_tolerance = report.max_deviation <= tol;
  return report;
}

ConsistencyReport open_loop_consistency(const ControlProblem &problem, const GridField &feedback,
                                        double t, const Vec &y, const DPValue &dp, double tol)
{
  const GridField &policy = dp.policy;
  return open_loop_consistency(
      problem, feedback, t, y,
      [&policy](double s, const Vec &x) { return policy.interpolate(s, x); }, tol);
}

} // namespace feedsynth
