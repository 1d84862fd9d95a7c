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

#include "feedsynth/costate.hpp"

#include <cmath>
#include <sstream>

#include "feedsynth/errors.hpp"
#include "feedsynth/parallel.hpp"

namespace feedsynth
{

namespace
{

struct TotalDerivatives
{
  Mat J; // grad[f], N x N
  Vec G; // grad[F], N
};

TotalDerivatives total_derivatives(const ControlProblem &problem, const Vec &x, const Vec &u,
                                   const double *grad_u)
{
  const int n = problem.state_dim;
  const int m = problem.control_dim;
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      Du(grad_u, m, n);
  TotalDerivatives td;
  td.J = problem.dynamics_jac_x(x, u) + problem.dynamics_jac_u(x, u) * Du;
  td.G = problem.running_cost_grad_x(x, u) + Du.transpose() * problem.running_cost_grad_u(x, u);
  return td;
}

} // namespace

CostateSolution solve_costate(const ControlProblem &problem, const GridField &u,
                              const CostateOptions &options)
{
  const Grid &grid = u.grid();
  const TimeGrid &tg = u.time_grid();
  const int n = problem.state_dim;
  const int m = problem.control_dim;
  if (grid.dim() != n || u.components() != m)
    throw InvalidArgument("control field layout does not match the problem dimensions");

  CostateSolution sol{GridField(grid, tg, n), 0.0, false};
  GridField &p = sol.p;
  const GridField grad_u = gradient_field(u, options.workers);
  const int last = tg.steps();

  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    const Vec terminal = -problem.grad_g(grid.node(node));
    p.set_value(last, node, terminal);
  }
  if (!p.all_finite())
    throw BlowUpError("terminal costate is non-finite", tg.t1());

  const double h_min = grid.min_spacing();
  std::vector<double> cfl(grid.node_count(), 0.0);
  double max_cfl = 0.0;

  for (int k = last - 1; k >= 0; --k) {
    const double t = tg.time(k);
    const double t_next = tg.time(k + 1);
    const double step = t_next - t;
    parallel_for(grid.node_count(), options.workers, [&](std::size_t node) {
      const Vec x = grid.node(node);
      const Vec u0 = u.value(k, node);

      // Characteristic foot point on the later slice (RK2 midpoint).
      const Vec v0 = problem.dynamics(x, u0);
      const Vec x_half = x + 0.5 * step * v0;
      const Vec u_half = u.interpolate(t + 0.5 * step, x_half);
      const Vec v_half = problem.dynamics(x_half, u_half);
      const Vec x_plus = grid.clamp(x + step * v_half);
      cfl[node] = v_half.cwiseAbs().maxCoeff() * step / h_min;

      Vec p_plus(n), u_plus(m);
      std::vector<double> du_plus(static_cast<std::size_t>(m) * n);
      p.interpolate_slice(k + 1, x_plus.data(), p_plus.data());
      u.interpolate_slice(k + 1, x_plus.data(), u_plus.data());
      grad_u.interpolate_slice(k + 1, x_plus.data(), du_plus.data());

      const TotalDerivatives here =
          total_derivatives(problem, x, u0, grad_u.slice(k) + node * grad_u.components());
      const TotalDerivatives there = total_derivatives(problem, x_plus, u_plus, du_plus.data());

      // p0 (I - dt/2 J0) = p+ - dt/2 (G0 + G+ - p+ J+), p as a row vector.
      const Vec rhs = p_plus - 0.5 * step * (here.G + there.G - there.J.transpose() * p_plus);
      const Mat lhs = Mat::Identity(n, n) - 0.5 * step * here.J.transpose();
      const Vec p0 = n == 1 ? Vec(rhs / lhs(0, 0)) : Vec(lhs.partialPivLu().solve(rhs));
      for (int i = 0; i < n; ++i)
        p(k, node, i) = p0[i];
    });

    const double *slice = p.slice(k);
    for (std::size_t i = 0; i < p.slice_size(); ++i) {
      if (!std::isfinite(slice[i])) {
        std::ostringstream os;
        os << "costate became non-finite at t=" << t;
        throw BlowUpError(os.str(), t);
      }
    }
    for (double c : cfl)
      max_cfl = std::max(max_cfl, c);
  }
  sol.max_cfl = max_cfl;
  sol.cfl_warning = max_cfl > 1.0;
  return sol;
}

} // namespace feedsynth
