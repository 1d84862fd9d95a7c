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

// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "feedsynth/burgers.hpp"
#include "feedsynth/costate.hpp"
#include "feedsynth/demo_configs.hpp"
#include "feedsynth/descent.hpp"
#include "feedsynth/field_io.hpp"
#include "feedsynth/lqr.hpp"
#include "feedsynth/obstacle.hpp"
#include "feedsynth/oracles.hpp"
#include "feedsynth/runner.hpp"

using namespace feedsynth;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace
{

int failures = 0;

void verdict(int id, bool ok, const std::string &title, const std::string &detail)
{
  std::printf("%s  criterion %2d  %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok)
    ++failures;
}

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const LQRSpec kScalar{Mat::Zero(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1),
                      Mat::Identity(1, 1), Mat::Zero(1, 1)};

struct DemoRun
{
  RunConfig config;
  RunOutcome outcome;
  json summary;
  CsvTable report;
  double seconds = 0.0;
  fs::path dir;
};

DemoRun run_demo(const std::string &name, int workers, const fs::path &dir)
{
  DemoRun r;
  ParsedConfig parsed = parse_config_text(*demo_config(name));
  r.config = parsed.config;
  r.config.workers = workers;
  r.dir = dir;
  const auto start = std::chrono::steady_clock::now();
  r.outcome = run(r.config, dir.string());
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (fs::exists(dir / "summary.json"))
    r.summary = json::parse(slurp(dir / "summary.json"));
  if (fs::exists(dir / "report.csv"))
    r.report = read_table_csv((dir / "report.csv").string());
  return r;
}

double summary_number(const json &s, const char *key)
{
  return s.contains(key) && s[key].is_number() ? s[key].get<double>()
                                               : std::numeric_limits<double>::quiet_NaN();
}

std::vector<Sample> space_time_ensemble(int dim, double half_width, int points)
{
  std::vector<Sample> out;
  for (int j = 0; j < 10; ++j)
  {
    const auto s = lattice_samples(0.1 * j, Vec::Constant(dim, -half_width),
                                   Vec::Constant(dim, half_width), std::vector<int>(dim, points));
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

/// Worst per-slice inner product and monotonicity over a report.
struct DescentAudit
{
  std::string name;
  double worst_inner = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  bool converged = false;
  int iterations = 0;
};

DescentAudit audit_table(const std::string &name, const CsvTable &t, bool converged)
{
  DescentAudit a{name};
  a.converged = converged;
  const auto col = [&](const char *h) {
    return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), h) - t.header.begin());
  };
  const std::size_t obj = col("objective"), inner = col("max_slice_inner");
  for (std::size_t i = 1; i < t.rows.size(); ++i)
  {
    a.worst_inner = std::max(a.worst_inner, t.rows[i][inner]);
    a.monotone = a.monotone && t.rows[i][obj] <= t.rows[i - 1][obj];
  }
  a.iterations = static_cast<int>(t.rows.size()) - 1;
  return a;
}

double oracle_residual(int nodes, int steps)
{
  const ControlProblem p = lqr_to_problem(kScalar, 1.0);
  const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {nodes});
  const TimeGrid tg(0.0, 1.0, steps);
  const GridField u = lqr_feedback_field(kScalar, solve_riccati(derive_lqr(kScalar), 1.0, steps), g, tg);
  const GridField grad = gradient_field(p, u, solve_costate(p, u).p);
  return stationarity_residual(p, u, grad, nodes_in_box(g, Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)));
}

std::vector<double> random_vector(std::size_t n, unsigned seed, double lo, double hi)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double &x : v)
    x = d(rng);
  return v;
}

} // namespace

int main()
{
  const fs::path root = fs::temp_directory_path() / "feedsynth_acceptance";
  fs::remove_all(root);
  std::vector<DescentAudit> audits;

  // 1. LQR-1D end-to-end.
  const DemoRun lqr1 = run_demo("lqr-1d", 1, root / "lqr-1d-w1");
  {
    const RunConfig &c = lqr1.config;
    const bool setup = c.grid_nodes == std::vector<int>{201} && c.time_steps == 200 &&
                       c.initial_field == "zero" && c.descent.mode == "poisson" &&
                       c.grid_lo[0] == -2.0 && c.grid_hi[0] == 2.0 && c.measure_lo[0] == -1.0 &&
                       c.measure_hi[0] == 1.0;
    const double err = summary_number(lqr1.summary, "gain_error_vs_riccati");
    const bool ok = setup && lqr1.outcome.exit_code == kExitConverged && err <= 0.02 &&
                    lqr1.seconds <= 300.0;
    verdict(1, ok, "LQR-1D end-to-end",
            "status " + lqr1.outcome.status + ", " + std::to_string(lqr1.summary.value("iterations", -1)) +
                " iterations, max gain rel err " + sci(err) + " (tol 2e-2, t <= 0.9T, |x| <= 1), runtime " +
                sci(lqr1.seconds) + " s (tol 300 s)");
    audits.push_back(audit_table("lqr-1d", lqr1.report, lqr1.outcome.exit_code == kExitConverged));
  }

  // 2. LQR-2D.
  const DemoRun lqr2 = run_demo("lqr-2d", 1, root / "lqr-2d-w1");
  {
    const LQRSpec &s = lqr2.config.problem.lqr;
    const Mat M = s.B * s.R.inverse() * s.B.transpose();
    const Eigen::JacobiSVD<Mat> svd(M);
    const double cond = svd.singularValues()[0] / svd.singularValues()[svd.singularValues().size() - 1];
    const double err = summary_number(lqr2.summary, "gain_error_vs_riccati");
    const double fit = summary_number(lqr2.summary, "linear_fit_residual");
    const bool ok = s.state_dim() == 2 && s.control_dim() == 2 && cond <= 10.0 &&
                    lqr2.outcome.exit_code == kExitConverged && err <= 0.05 && fit <= 1e-2;
    verdict(2, ok, "LQR-2D",
            "cond(BR^-1B') " + sci(cond) + " (tol 10), status " + lqr2.outcome.status +
                ", fit residual " + sci(fit) + " (tol 1e-2), max gain rel err " + sci(err) +
                " (tol 5e-2)");
    audits.push_back(audit_table("lqr-2d", lqr2.report, lqr2.outcome.exit_code == kExitConverged));
  }

  // 3. Stationarity of the oracle.
  {
    const ControlProblem p = lqr_to_problem(kScalar, 1.0);
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {201});
    const TimeGrid tg(0.0, 1.0, 200);
    const GridField seed = lqr_feedback_field(kScalar, solve_riccati(derive_lqr(kScalar), 1.0, 200), g, tg);
    DescentConfig dc;
    dc.samples = space_time_ensemble(1, 2.0, 41);
    dc.measure_lo = Vec::Constant(1, -1.0);
    dc.measure_hi = Vec::Constant(1, 1.0);
    dc.max_iterations = 0;
    const DescentResult seeded = run_descent(p, dc, seed);
    const double r1 = seeded.report.iterations.front().residual;
    const double r2 = oracle_residual(401, 400);
    const double scale = 4.0 * r2;
    const double crit1 = summary_number(lqr1.summary, "final_residual");
    const bool ok = r1 <= 5.0 * scale && r1 <= crit1;
    verdict(3, ok, "oracle stationarity",
            "max |grad I| " + sci(r1) + " at 201x200, discretization scale 4 x " + sci(r2) + " = " +
                sci(scale) + " (need <= 5x), criterion 1 residual " + sci(crit1));
  }

  // 4. Adjoint-gradient correctness.
  {
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {201});
    const TimeGrid tg(0.0, 1.0, 200);
    const std::vector<Sample> samples = space_time_ensemble(1, 2.0, 41);
    GridField lqr_base(g, tg, 1);
    for (int k = 0; k < lqr_base.slices(); ++k)
      for (std::size_t n = 0; n < g.node_count(); ++n)
        lqr_base(k, n, 0) = -0.5 * g.coord(0, static_cast<int>(n));
    const ControlProblem lqr = lqr_to_problem(kScalar, 1.0);
    const ControlProblem academic = academic_problem(scalar_function("neg_identity"), 1.0);
    const GridField academic_base(g, tg, 1);
    double worst_lqr = 0.0, worst_academic = 0.0, worst_sample = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed)
    {
      const GridField bump = gaussian_bump_field(g, tg, 1, seed);
      const DerivativeCheck a = directional_derivative_check(lqr, lqr_base, bump, samples, 1e-4);
      const DerivativeCheck b = directional_derivative_check(academic, academic_base, bump, samples, 1e-4);
      worst_lqr = std::max(worst_lqr, a.rel_err);
      worst_academic = std::max(worst_academic, b.rel_err);
      worst_sample = std::max({worst_sample, a.worst_sample_rel_err, b.worst_sample_rel_err});
    }
    const bool ok = worst_lqr <= 1e-3 && worst_academic <= 1e-3;
    verdict(4, ok, "adjoint gradient",
            "10 bump directions, eps_fd 1e-4: worst rel err LQR-1D " + sci(worst_lqr) +
                ", academic " + sci(worst_academic) + " (tol 1e-3); worst single-sample " +
                sci(worst_sample));
  }

  // 6. Obstacle solver (runs before 5, which also audits the constrained run).
  {
    // (a) Unconstrained agreement with the Poisson direction.
    double diff_a = 0.0;
    for (int comps : {1, 2})
    {
      const Grid g(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), {13, 11});
      const auto grad = random_vector(comps * g.node_count(), 100 + comps, -2.0, 2.0);
      const auto u = random_vector(comps * g.node_count(), 200 + comps, -1.0, 1.0);
      ObstacleOptions opt;
      opt.tol = 1e-14;
      opt.relaxation = 1.7;
      const ObstacleSolution s = solve_obstacle_slice(g, grad, u, ConstraintSet::unconstrained(comps), opt);
      const PoissonSolution ps = poisson_direction(g, grad, comps);
      for (std::size_t i = 0; i < u.size(); ++i)
        diff_a = std::max(diff_a, std::abs(s.U[i] - u[i] - ps.U[i]));
    }
    // (b) Constant gradient in a box.
    const Grid line(Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), {101});
    const ConstraintSet unit_box = ConstraintSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
    const ObstacleSolution sb = solve_obstacle_slice(line, std::vector<double>(101, 0.3),
                                                     std::vector<double>(101, 0.0), unit_box);
    const bool exact_b = std::all_of(sb.U.begin(), sb.U.end(), [](double v) { return v == -1.0; });
    // (c) Complementarity at convergence, box and ball.
    double comp = 0.0;
    {
      const Grid g(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), {15, 15});
      ObstacleOptions opt;
      opt.tol = 1e-14;
      opt.relaxation = 1.6;
      const ConstraintSet box = ConstraintSet::box(Vec::Constant(1, -0.5), Vec::Constant(1, 0.5));
      const auto grad = random_vector(g.node_count(), 300, -3.0, 3.0);
      const auto u = random_vector(g.node_count(), 301, -0.5, 0.5);
      comp = std::max(comp, complementarity_residual(g, grad, u, solve_obstacle_slice(g, grad, u, box, opt).U, box));
      const ConstraintSet ball = ConstraintSet::ball(Vec::Zero(2), 0.6);
      const auto grad2 = random_vector(2 * g.node_count(), 302, -3.0, 3.0);
      const std::vector<double> u2(2 * g.node_count(), 0.0);
      comp = std::max(comp, complementarity_residual(g, grad2, u2, solve_obstacle_slice(g, grad2, u2, ball, opt).U, ball));
    }
    // (d) Constrained LQR: K = [-0.5, 0.5], pointwise directions.
    ControlProblem p = lqr_to_problem(kScalar, 1.0);
    p.constraint = ConstraintSet::box(Vec::Constant(1, -0.5), Vec::Constant(1, 0.5));
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {41});
    const TimeGrid tg(0.0, 1.0, 40);
    DescentConfig dc;
    dc.mode = DirectionMode::kPointwise;
    dc.samples = space_time_ensemble(1, 2.0, 41);
    dc.measure_lo = Vec::Constant(1, -1.0);
    dc.measure_hi = Vec::Constant(1, 1.0);
    const DescentResult r = run_descent(p, dc, GridField(g, tg, 1));
    const RiccatiSolution ric = solve_riccati(derive_lqr(kScalar), 1.0, 40);
    double inactive_err = 0.0, origin = 0.0;
    int active = 0, on_boundary = 0;
    for (int k = 0; k < r.u.slices() && tg.time(k) <= 0.9 + 1e-12; ++k)
    {
      const double K = lqr_gain(kScalar, ric, tg.time(k))(0, 0);
      for (std::size_t n = 0; n < g.node_count(); ++n)
      {
        const double x = g.coord(0, static_cast<int>(n));
        if (std::abs(x) > 1.0)
          continue;
        const double free = K * x, v = r.u(k, n, 0);
        if (std::abs(free) >= 0.5)
        {
          ++active;
          on_boundary += v == std::copysign(0.5, free);
        }
        else if (x == 0.0)
          origin = std::max(origin, std::abs(v));
        else
          inactive_err = std::max(inactive_err, std::abs(v - free) / std::abs(free));
      }
    }
    audits.push_back(audit_table("constrained lqr (pointwise)", report_table(r.report),
                                 r.report.status == DescentStatus::kConverged));
    const bool ok = diff_a <= 1e-8 && exact_b && comp <= 1e-8 &&
                    r.report.status == DescentStatus::kConverged && inactive_err <= 0.05 &&
                    origin <= 1e-8 && active > 0 && on_boundary == active;
    verdict(6, ok, "obstacle solver",
            "(a) |obstacle - poisson| " + sci(diff_a) + " (tol 1e-8); (b) U == -1 " +
                (exact_b ? "exactly" : "violated") + "; (c) complementarity " + sci(comp) +
                " (tol 1e-8); (d) inactive rel err " + sci(inactive_err) + " (tol 5e-2), " +
                std::to_string(on_boundary) + "/" + std::to_string(active) + " active nodes on the boundary");
  }

  // 8. DP cross-check (academic demo).
  const DemoRun academic = run_demo("academic-burgers", 1, root / "academic-w1");
  {
    const VerificationConfig &v = academic.config.verification;
    const bool setup = academic.config.problem.kind == "academic" && academic.config.problem.f == "neg_identity" &&
                       academic.config.problem.horizon == 1.0 && v.dp_cross_check && v.dp_state_nodes == 201 &&
                       v.dp_control_nodes == 201 && v.dp_steps == 200 && academic.config.measure_lo[0] == -1.0 &&
                       academic.config.measure_hi[0] == 1.0;
    const double gap = summary_number(academic.summary, "objective_gap_vs_dp");
    const bool ok = setup && academic.outcome.exit_code == kExitConverged && gap <= 0.05;
    verdict(8, ok, "DP cross-check",
            "descent objective " + sci(summary_number(academic.summary, "objective_on_dp_lattice")) +
                ", DP value " + sci(summary_number(academic.summary, "dp_value")) + ", relative gap " +
                sci(gap) + " (tol 5e-2)");
    audits.push_back(audit_table("academic-burgers", academic.report, academic.outcome.exit_code == kExitConverged));
  }

  // 5. Descent inequality over every converging run.
  {
    ControlProblem p = lqr_to_problem(kScalar, 1.0);
    DescentConfig dc;
    dc.mode = DirectionMode::kObstacle;
    dc.samples = space_time_ensemble(1, 2.0, 41);
    dc.measure_lo = Vec::Constant(1, -1.0);
    dc.measure_hi = Vec::Constant(1, 1.0);
    dc.obstacle.relaxation = 1.8;
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {41});
    const DescentResult r = run_descent(p, dc, GridField(g, TimeGrid(0.0, 1.0, 40), 1));
    audits.push_back(audit_table("lqr-1d coarse (obstacle)", report_table(r.report),
                                 r.report.status == DescentStatus::kConverged));
    bool ok = true;
    std::string detail;
    for (const DescentAudit &a : audits)
    {
      ok = ok && a.converged && a.monotone && a.worst_inner <= 1e-10;
      detail += (detail.empty() ? "" : "; ") + a.name + ": " + std::to_string(a.iterations) +
                " it, max slice inner " + sci(a.worst_inner) + (a.monotone ? ", monotone" : ", NOT monotone") +
                (a.converged ? "" : ", not converged");
    }
    verdict(5, ok, "descent inequality", detail + " (tol +1e-10)");
  }

  // 7. Burgers.
  {
    const BurgersSolution up(scalar_function("identity"), 1.0);
    const BurgersSolution down(scalar_function("neg_identity"), 1.0);
    double err = 0.0, res = 0.0;
    for (double t : {0.1, 0.25, 0.5, 0.75, 0.9})
      for (double x : {-1.5, -0.5, 0.0, 0.3, 1.2})
      {
        err = std::max(err, std::abs(up.eval(t, x) - x / t));
        err = std::max(err, std::abs(down.eval(t, x) + x / (2.0 - t)));
      }
    for (double t : {0.5, 0.7, 0.9})
      for (double x : {-1.0, -0.3, 0.4, 1.0})
        res = std::max({res, up.residual(t, x), down.residual(t, x)});
    const double blow = up.blowup_time().value_or(std::numeric_limits<double>::quiet_NaN());
    const bool ok = err <= 1e-8 && std::abs(blow) <= 1e-6 && !down.blowup_time() && res <= 1e-6;
    verdict(7, ok, "Burgers",
            "closed-form error " + sci(err) + " (tol 1e-8), blow-up time " + sci(blow) +
                " (tol 0 +- 1e-6), f=-x " + (down.blowup_time() ? "blows up" : "no blow-up") +
                ", PDE residual " + sci(res) + " (tol 1e-6)");
  }

  // 9. Open-loop consistency.
  {
    const ControlProblem p = lqr_to_problem(kScalar, 1.0);
    const Grid g(Vec::Constant(1, -2.0), Vec::Constant(1, 2.0), {201});
    const TimeGrid tg(0.0, 1.0, 200);
    const RiccatiSolution ric = solve_riccati(derive_lqr(kScalar), 1.0, 200);
    const GridField oracle = lqr_feedback_field(kScalar, ric, g, tg);
    const FeedbackFunction gain = [&](double t, const Vec &x) { return lqr_feedback(kScalar, ric, t, x); };
    GridField converged = oracle;
    bool loaded = true;
    try
    {
      converged = read_field_csv((lqr1.dir / "feedback.csv").string(), g, tg, 1);
    }
    catch (const std::exception &)
    {
      loaded = false;
    }
    double dev_oracle = 0.0, ratio = 0.0;
    for (double y : {-1.0, -0.55, 0.35, 0.8, 1.0})
    {
      dev_oracle = std::max(dev_oracle, open_loop_consistency(p, oracle, 0.0, Vec::Constant(1, y), gain, 1e-6).max_deviation);
      const ConsistencyReport c = open_loop_consistency(p, converged, 0.0, Vec::Constant(1, y), gain, 0.0);
      double scale = 0.0;
      for (std::size_t i = 0; i < c.trajectory.states.size(); ++i)
        scale = std::max(scale, std::abs(gain(c.trajectory.times[i], c.trajectory.states[i])[0]));
      // 2% of the control size plus the interpolation error of a linear field (zero).
      ratio = std::max(ratio, c.max_deviation / (0.02 * scale));
    }
    const bool ok = loaded && dev_oracle <= 1e-6 && ratio <= 1.0;
    verdict(9, ok, "open-loop consistency",
            "oracle field deviation " + sci(dev_oracle) + " (tol 1e-6); converged field deviation " +
                sci(ratio) + " x the 2% tolerance (need <= 1)");
  }

  // 10. Determinism across worker counts.
  {
    bool ok = true;
    std::string detail;
    for (const DemoRun *first : {&lqr1, &lqr2, &academic})
    {
      const DemoRun second = run_demo(first->config.name, 2, root / (first->config.name + "-w2"));
      int files = 0, same = 0;
      for (const auto &entry : fs::directory_iterator(first->dir))
        if (entry.path().extension() == ".csv")
        {
          ++files;
          same += slurp(entry.path()) == slurp(second.dir / entry.path().filename());
        }
      ok = ok && files > 0 && same == files && second.outcome.exit_code == first->outcome.exit_code;
      detail += (detail.empty() ? "" : "; ") + first->config.name + " " + std::to_string(same) + "/" +
                std::to_string(files) + " CSVs identical";
    }
    verdict(10, ok, "determinism (1 vs 2 workers)", detail);
  }

  fs::remove_all(root);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
