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

#include "feedsynth/flow.hpp"

#include <cmath>
#include <sstream>

#include "feedsynth/errors.hpp"
#include "feedsynth/parallel.hpp"

namespace feedsynth
{

namespace
{

int step_count(double span, double dt)
{
  if (span <= 0.0)
    return 0;
  const int n = static_cast<int>(std::ceil(span / dt - 1e-9));
  return std::max(n, 1);
}

} // namespace

Trajectory integrate_flow(const ControlProblem &problem, const GridField &u, double t,
                          const Vec &y)
{
  const TimeGrid &tg = u.time_grid();
  const double T = tg.t1();
  if (!(t >= tg.t0() && t <= T))
    throw InvalidArgument("initial time outside the field's time grid");
  if (y.size() != problem.state_dim || y.size() != u.grid().dim())
    throw InvalidArgument("initial state has the wrong dimension");

  const int n = step_count(T - t, tg.dt());
  const double h = n > 0 ? (T - t) / n : 0.0;
  auto control = [&](double s, const Vec &x) { return u.interpolate(s, x); };
  auto velocity = [&](double s, const Vec &x) { return problem.dynamics(x, control(s, x)); };

  Trajectory traj;
  traj.times.reserve(n + 1);
  traj.states.reserve(n + 1);
  traj.controls.reserve(n + 1);
  traj.mid_states.reserve(n);
  traj.mid_controls.reserve(n);

  Vec x = y;
  double s = t;
  Vec ux = control(s, x);
  Vec k1 = problem.dynamics(x, ux);
  traj.times.push_back(s);
  traj.states.push_back(x);
  traj.controls.push_back(ux);

  for (int i = 0; i < n; ++i) {
    const double s_next = i + 1 == n ? T : t + (i + 1) * h;
    const double hs = s_next - s;
    const Vec k2 = velocity(s + 0.5 * hs, x + 0.5 * hs * k1);
    const Vec k3 = velocity(s + 0.5 * hs, x + 0.5 * hs * k2);
    const Vec k4 = velocity(s_next, x + hs * k3);
    const Vec x_next = x + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x_next.allFinite()) {
      std::ostringstream os;
      os << "closed-loop state became non-finite at s=" << s_next;
      throw BlowUpError(os.str(), s_next);
    }
    const Vec u_next = control(s_next, x_next);
    const Vec f_next = problem.dynamics(x_next, u_next);
    const Vec x_mid = 0.5 * (x + x_next) + (hs / 8.0) * (k1 - f_next);
    traj.mid_states.push_back(x_mid);
    traj.mid_controls.push_back(control(s + 0.5 * hs, x_mid));
    traj.times.push_back(s_next);
    traj.states.push_back(x_next);
    traj.controls.push_back(u_next);
    x = x_next;
    k1 = f_next;
    s = s_next;
  }
  return traj;
}

double integrate_along(const Trajectory &traj,
                       const std::function<double(double, const Vec &, const Vec &)> &integrand)
{
  double total = 0.0;
  if (traj.steps() == 0)
    return total;
  double left = integrand(traj.times[0], traj.states[0], traj.controls[0]);
  for (std::size_t i = 0; i < traj.steps(); ++i) {
    const double a = traj.times[i], b = traj.times[i + 1];
    const double mid = integrand(0.5 * (a + b), traj.mid_states[i], traj.mid_controls[i]);
    const double right = integrand(b, traj.states[i + 1], traj.controls[i + 1]);
    total += (b - a) / 6.0 * (left + 4.0 * mid + right);
    left = right;
  }
  return total;
}

double trajectory_cost(const ControlProblem &problem, const Trajectory &traj)
{
  const double running = integrate_along(
      traj, [&](double, const Vec &x, const Vec &u) { return problem.running_cost(x, u); });
  const double total = running + problem.g(traj.states.back());
  if (std::isfinite(total))
    return total;
  // Finite states can still overflow the cost; report where it first happens.
  double when = traj.times.back();
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    if (!std::isfinite(problem.running_cost(traj.states[k], traj.controls[k])))
    {
      when = traj.times[k];
      break;
    }
  std::ostringstream os;
  os << "cost became non-finite at t=" << when;
  throw BlowUpError(os.str(), when);
}

double cost_functional(const ControlProblem &problem, const GridField &u, double t, const Vec &y)
{
  return trajectory_cost(problem, integrate_flow(problem, u, t, y));
}

std::vector<Sample> lattice_samples(double t, const Vec &lo, const Vec &hi,
                                    const std::vector<int> &points)
{
  const int n = static_cast<int>(points.size());
  if (n == 0 || lo.size() != n || hi.size() != n)
    throw InvalidArgument("sample lattice bounds and point counts must agree");
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    if (points[d] < 1 || lo[d] > hi[d])
      throw InvalidArgument("sample lattice needs >= 1 point per axis and lo <= hi");
    total *= static_cast<std::size_t>(points[d]);
  }
  std::vector<Sample> samples;
  samples.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Sample s;
    s.t = t;
    s.y.resize(n);
    std::size_t rem = idx;
    for (int d = n - 1; d >= 0; --d) {
      const int i = static_cast<int>(rem % points[d]);
      rem /= points[d];
      s.y[d] = points[d] == 1 ? 0.5 * (lo[d] + hi[d])
                              : lo[d] + (hi[d] - lo[d]) * i / (points[d] - 1);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

double ensemble_objective(const ControlProblem &problem, const GridField &u,
                          const std::vector<Sample> &samples, int workers)
{
  if (samples.empty())
    throw InvalidArgument("ensemble objective needs at least one sample");
  std::vector<double> costs(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    try {
      costs[i] = cost_functional(problem, u, samples[i].t, samples[i].y);
    } catch (const BlowUpError &e) {
      std::ostringstream os;
      os << "sample " << i << " (t=" << samples[i].t << ", y=" << samples[i].y.transpose()
         << "): " << e.what();
      throw BlowUpError(os.str(), e.time());
    }
  });
  double sum = 0.0;
  for (double c : costs)
    sum += c;
  return sum / static_cast<double>(samples.size());
}

CsvTable trajectory_table(const Trajectory &traj)
{
  CsvTable table;
  table.header.push_back("s");
  const auto n = traj.states.front().size();
  const auto m = traj.controls.front().size();
  for (Eigen::Index d = 0; d < n; ++d)
    table.header.push_back("x" + std::to_string(d + 1));
  for (Eigen::Index c = 0; c < m; ++c)
    table.header.push_back("u" + std::to_string(c + 1));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    row.insert(row.end(), traj.states[i].data(), traj.states[i].data() + n);
    row.insert(row.end(), traj.controls[i].data(), traj.controls[i].data() + m);
    table.rows.push_back(std::move(row));
  }
  return table;
}

} // namespace feedsynth
