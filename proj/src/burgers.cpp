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

#include "feedsynth/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "feedsynth/errors.hpp"

namespace feedsynth
{

BurgersSolution::BurgersSolution(ScalarFunction terminal, double horizon, double sample_lo,
                                 double sample_hi, int sample_count,
                                 std::optional<double> sup_derivative)
    : f_(std::move(terminal)), T_(horizon)
{
  if (!f_.value || !f_.derivative)
    throw InvalidArgument("terminal data needs a value and a derivative");
  if (!(horizon > 0.0))
    throw InvalidArgument("horizon must be positive");
  if (sup_derivative)
  {
    sup_fprime_ = *sup_derivative;
  }
  else
  {
    if (!(sample_lo < sample_hi) || sample_count < 2)
      throw InvalidArgument("derivative sampling box is empty");
    resolution_ = (sample_hi - sample_lo) / (sample_count - 1);
    sup_fprime_ = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < sample_count; ++i)
    {
      const double x = i == sample_count - 1 ? sample_hi : sample_lo + i * resolution_;
      sup_fprime_ = std::max(sup_fprime_, f_.derivative(x));
    }
  }
  if (sup_fprime_ > 0.0)
    blowup_ = T_ - 1.0 / sup_fprime_;
}

double BurgersSolution::foot(double t, double x, double newton_tol, int max_newton) const
{
  if (!(t <= T_) || (blowup_ && !(t > *blowup_)))
  {
    std::ostringstream os;
    os << "t=" << t << " is outside the classical regime";
    throw InvalidArgument(os.str());
  }
  if (t == T_)
    return x;
  const double s = t - T_;
  // phi is increasing in the classical regime.
  auto phi = [&](double xi) { return xi + s * f_.value(xi) - x; };

  double a = x, b = x;
  double fa = phi(a), fb = fa;
  if (fa == 0.0)
    return x;
  double width = std::max(1.0, std::abs(x)) * 1e-3;
  bool bracketed = false;
  for (int i = 0; i < 80 && !bracketed; ++i)
  {
    if (fa > 0.0)
    {
      b = a;
      fb = fa;
      a = x - width;
      fa = phi(a);
      bracketed = fa <= 0.0;
    }
    else
    {
      a = b;
      fa = fb;
      b = x + width;
      fb = phi(b);
      bracketed = fb >= 0.0;
    }
    width *= 2.0;
  }
  if (!bracketed || !std::isfinite(fa) || !std::isfinite(fb))
    throw ConvergenceError("characteristic inversion failed: no bracket", std::abs(fa), 0);
  if (fa == 0.0)
    return a;
  if (fb == 0.0)
    return b;

  double xi = 0.5 * (a + b);
  for (int it = 0; it < max_newton; ++it)
  {
    const double val = phi(xi);
    if (val == 0.0)
      return xi;
    if (val < 0.0)
      a = xi;
    else
      b = xi;
    const double slope = 1.0 + s * f_.derivative(xi);
    double next = slope > 0.0 ? xi - val / slope : 0.5 * (a + b);
    if (!(next > a && next < b))
      next = 0.5 * (a + b);
    const double step = std::abs(next - xi);
    xi = next;
    if (step <= newton_tol * std::max(1.0, std::abs(xi)) || b - a <= newton_tol)
      return xi;
  }
  throw ConvergenceError("characteristic inversion failed: iteration limit", b - a, max_newton);
}

double BurgersSolution::eval(double t, double x, double newton_tol, int max_newton) const
{
  return f_.value(foot(t, x, newton_tol, max_newton));
}

double BurgersSolution::residual(double t, double x, double h_fd) const
{
  if (!(h_fd > 0.0) || t + h_fd > T_)
    throw InvalidArgument("finite-difference stencil leaves the time interval");
  const double u = eval(t, x);
  const double ut = (eval(t + h_fd, x) - eval(t - h_fd, x)) / (2.0 * h_fd);
  const double ux = (eval(t, x + h_fd) - eval(t, x - h_fd)) / (2.0 * h_fd);
  return std::abs(ut + u * ux);
}

namespace
{

bool classical_at(const BurgersSolution &sol, double t)
{
  return !sol.blowup_time() || t > *sol.blowup_time();
}

} // namespace

GridField burgers_field(const BurgersSolution &sol, const Grid &grid, const TimeGrid &time_grid)
{
  if (grid.dim() != 1)
    throw InvalidArgument("Burgers fields are one-dimensional");
  GridField field(grid, time_grid, 1, std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < field.slices(); ++k)
  {
    const double t = time_grid.time(k);
    if (!classical_at(sol, t))
      continue;
    for (std::size_t node = 0; node < grid.node_count(); ++node)
      field(k, node, 0) = sol.eval(t, grid.coord(0, static_cast<int>(node)));
  }
  return field;
}

GridField academic_control_field(const BurgersSolution &sol, const Grid &grid,
                                 const TimeGrid &time_grid)
{
  GridField field = burgers_field(sol, grid, time_grid);
  const auto &f = sol.terminal_data().value;
  for (int k = 0; k < field.slices(); ++k)
    for (std::size_t node = 0; node < grid.node_count(); ++node)
      field(k, node, 0) -= f(grid.coord(0, static_cast<int>(node)));
  return field;
}

AcademicFeedbackReport verify_academic_feedback(const ScalarFunction &f, double horizon,
                                                const Grid &grid, const TimeGrid &time_grid,
                                                const std::vector<Sample> &starts)
{
  const BurgersSolution sol(f, horizon, grid.lo()[0], grid.hi()[0]);
  const GridField control = academic_control_field(sol, grid, time_grid);
  const ControlProblem problem = academic_problem(f, horizon);

  // First slice index from which every later slice is classical.
  int first_valid = 0;
  while (first_valid < control.slices() && !classical_at(sol, time_grid.time(first_valid)))
    ++first_valid;

  AcademicFeedbackReport report;
  report.affected.assign(starts.size(), false);
  for (std::size_t i = 0; i < starts.size(); ++i)
  {
    const Sample &s = starts[i];
    if (first_valid >= control.slices() || s.t < time_grid.time(first_valid))
    {
      report.affected[i] = true;
      continue;
    }
    Trajectory traj;
    try
    {
      traj = integrate_flow(problem, control, s.t, s.y);
    }
    catch (const BlowUpError &)
    {
      report.affected[i] = true;
      continue;
    }
    ++report.checked;
    const std::size_t n = traj.states.size();
    for (std::size_t k = 1; k + 1 < n; ++k)
    {
      const double h0 = traj.times[k] - traj.times[k - 1];
      const double h1 = traj.times[k + 1] - traj.times[k];
      const double d0 = (traj.states[k][0] - traj.states[k - 1][0]) / h0;
      const double d1 = (traj.states[k + 1][0] - traj.states[k][0]) / h1;
      report.max_el_residual =
          std::max(report.max_el_residual, std::abs(2.0 * (d1 - d0) / (h0 + h1)));
    }
    const double xT = traj.states.back()[0];
    const double velocity = f.value(xT) + traj.controls.back()[0];
    report.max_terminal_residual =
        std::max(report.max_terminal_residual, std::abs(velocity - f.value(xT)));
  }
  return report;
}

} // namespace feedsynth
