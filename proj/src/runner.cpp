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

#include "feedsynth/runner.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "feedsynth/burgers.hpp"
#include "feedsynth/errors.hpp"
#include "feedsynth/field_io.hpp"
#include "feedsynth/lqr.hpp"
#include "feedsynth/oracles.hpp"

namespace feedsynth
{

namespace
{

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Collects structural violations while reading a JSON document.
class Reader
{
public:
  explicit Reader(std::vector<std::string> &out) : out_(out) {}

  void fail(const std::string &path, const std::string &what) { out_.push_back(path + ": " + what); }

  bool object(const json &j, const std::string &path)
  {
    if (j.is_object())
      return true;
    fail(path, "must be an object");
    return false;
  }

  void only_keys(const json &obj, const std::string &prefix,
                 std::initializer_list<const char *> allowed)
  {
    for (auto it = obj.begin(); it != obj.end(); ++it)
    {
      bool known = false;
      for (const char *k : allowed)
        known = known || it.key() == k;
      if (!known)
        fail(join(prefix, it.key()), "unknown key");
    }
  }

  static std::string join(const std::string &prefix, const std::string &key)
  {
    return prefix.empty() ? key : prefix + "." + key;
  }

  void number(const json &obj, const std::string &prefix, const char *key, double &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_number())
      fail(join(prefix, key), "must be a number");
    else
      out = v.get<double>();
  }

  template <class Int>
  void integer(const json &obj, const std::string &prefix, const char *key, Int &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_number_integer())
      fail(join(prefix, key), "must be an integer");
    else
      out = v.get<Int>();
  }

  void boolean(const json &obj, const std::string &prefix, const char *key, bool &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_boolean())
      fail(join(prefix, key), "must be true or false");
    else
      out = v.get<bool>();
  }

  void string(const json &obj, const std::string &prefix, const char *key, std::string &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_string())
      fail(join(prefix, key), "must be a string");
    else
      out = v.get<std::string>();
  }

  void vector(const json &obj, const std::string &prefix, const char *key, Vec &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_array())
    {
      fail(join(prefix, key), "must be an array of numbers");
      return;
    }
    Vec tmp(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      if (!v[i].is_number())
      {
        fail(join(prefix, key), "must be an array of numbers");
        return;
      }
      tmp[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    out = tmp;
  }

  void doubles(const json &obj, const std::string &prefix, const char *key,
               std::vector<double> &out)
  {
    Vec tmp;
    const std::size_t before = out_.size();
    vector(obj, prefix, key, tmp);
    if (obj.contains(key) && out_.size() == before)
      out.assign(tmp.data(), tmp.data() + tmp.size());
  }

  void integers(const json &obj, const std::string &prefix, const char *key, std::vector<int> &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    if (!v.is_array())
    {
      fail(join(prefix, key), "must be an array of integers");
      return;
    }
    std::vector<int> tmp;
    for (const json &e : v)
    {
      if (!e.is_number_integer())
      {
        fail(join(prefix, key), "must be an array of integers");
        return;
      }
      tmp.push_back(e.get<int>());
    }
    out = tmp;
  }

  void matrix(const json &obj, const std::string &prefix, const char *key, Mat &out)
  {
    if (!obj.contains(key))
      return;
    const json &v = obj[key];
    const std::string path = join(prefix, key);
    if (!v.is_array() || v.empty() || !v[0].is_array())
    {
      fail(path, "must be a non-empty array of rows");
      return;
    }
    const std::size_t rows = v.size(), cols = v[0].size();
    Mat tmp(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
    {
      if (!v[i].is_array() || v[i].size() != cols)
      {
        fail(path, "rows must have equal length");
        return;
      }
      for (std::size_t j = 0; j < cols; ++j)
      {
        if (!v[i][j].is_number())
        {
          fail(path, "entries must be numbers");
          return;
        }
        tmp(i, j) = v[i][j].get<double>();
      }
    }
    out = tmp;
  }

private:
  std::vector<std::string> &out_;
};

void parse_into(const json &doc, RunConfig &c, Reader &r)
{
  if (!r.object(doc, "config"))
    return;
  r.only_keys(doc, "",
              {"schema_version", "name", "problem", "grid", "time_steps", "constraint",
               "initial_field", "descent", "ensemble", "measure", "output_dir", "seed", "workers",
               "verification"});
  if (!doc.contains("schema_version"))
    r.fail("schema_version", "is required");
  r.integer(doc, "", "schema_version", c.schema_version);
  r.string(doc, "", "name", c.name);
  r.integer(doc, "", "time_steps", c.time_steps);
  r.string(doc, "", "initial_field", c.initial_field);
  r.string(doc, "", "output_dir", c.output_dir);
  r.integer(doc, "", "seed", c.seed);
  r.integer(doc, "", "workers", c.workers);

  if (!doc.contains("problem"))
    r.fail("problem", "is required");
  else if (const json &p = doc["problem"]; r.object(p, "problem"))
  {
    r.only_keys(p, "problem",
                {"kind", "horizon", "A", "B", "Q", "R", "H", "f", "f_scale", "state_dim",
                 "control_dim"});
    r.string(p, "problem", "kind", c.problem.kind);
    r.number(p, "problem", "horizon", c.problem.horizon);
    r.matrix(p, "problem", "A", c.problem.lqr.A);
    r.matrix(p, "problem", "B", c.problem.lqr.B);
    r.matrix(p, "problem", "Q", c.problem.lqr.Q);
    r.matrix(p, "problem", "R", c.problem.lqr.R);
    r.matrix(p, "problem", "H", c.problem.lqr.H);
    r.string(p, "problem", "f", c.problem.f);
    r.number(p, "problem", "f_scale", c.problem.f_scale);
    r.integer(p, "problem", "state_dim", c.problem.state_dim);
    r.integer(p, "problem", "control_dim", c.problem.control_dim);
  }

  if (!doc.contains("grid"))
    r.fail("grid", "is required");
  else if (const json &g = doc["grid"]; r.object(g, "grid"))
  {
    r.only_keys(g, "grid", {"lo", "hi", "nodes"});
    r.vector(g, "grid", "lo", c.grid_lo);
    r.vector(g, "grid", "hi", c.grid_hi);
    r.integers(g, "grid", "nodes", c.grid_nodes);
  }

  if (doc.contains("constraint"))
    if (const json &k = doc["constraint"]; r.object(k, "constraint"))
    {
      r.only_keys(k, "constraint", {"kind", "lo", "hi", "center", "radius"});
      r.string(k, "constraint", "kind", c.constraint.kind);
      r.vector(k, "constraint", "lo", c.constraint.lo);
      r.vector(k, "constraint", "hi", c.constraint.hi);
      r.vector(k, "constraint", "center", c.constraint.center);
      r.number(k, "constraint", "radius", c.constraint.radius);
    }

  if (doc.contains("descent"))
    if (const json &d = doc["descent"]; r.object(d, "descent"))
    {
      r.only_keys(d, "descent",
                  {"mode", "tol", "max_iterations", "eps_init", "eps_min", "eps_max",
                   "eps_growth", "armijo_c1", "backtrack", "obstacle_tol", "obstacle_max_iter",
                   "relaxation", "poisson_tol", "hamiltonian_resolution"});
      DescentSettings &s = c.descent;
      r.string(d, "descent", "mode", s.mode);
      r.number(d, "descent", "tol", s.tol);
      r.integer(d, "descent", "max_iterations", s.max_iterations);
      r.number(d, "descent", "eps_init", s.eps_init);
      r.number(d, "descent", "eps_min", s.eps_min);
      r.number(d, "descent", "eps_max", s.eps_max);
      r.number(d, "descent", "eps_growth", s.eps_growth);
      r.number(d, "descent", "armijo_c1", s.armijo_c1);
      r.number(d, "descent", "backtrack", s.backtrack);
      r.number(d, "descent", "obstacle_tol", s.obstacle_tol);
      r.integer(d, "descent", "obstacle_max_iter", s.obstacle_max_iter);
      r.number(d, "descent", "relaxation", s.relaxation);
      r.number(d, "descent", "poisson_tol", s.poisson_tol);
      r.integer(d, "descent", "hamiltonian_resolution", s.hamiltonian_resolution);
    }

  if (!doc.contains("ensemble"))
    r.fail("ensemble", "is required");
  else if (const json &e = doc["ensemble"]; r.object(e, "ensemble"))
  {
    r.only_keys(e, "ensemble", {"lo", "hi", "points", "times"});
    r.vector(e, "ensemble", "lo", c.ensemble.lo);
    r.vector(e, "ensemble", "hi", c.ensemble.hi);
    r.integers(e, "ensemble", "points", c.ensemble.points);
    r.doubles(e, "ensemble", "times", c.ensemble.times);
  }

  if (doc.contains("measure"))
    if (const json &m = doc["measure"]; r.object(m, "measure"))
    {
      r.only_keys(m, "measure", {"lo", "hi"});
      r.vector(m, "measure", "lo", c.measure_lo);
      r.vector(m, "measure", "hi", c.measure_hi);
    }

  if (doc.contains("verification"))
    if (const json &v = doc["verification"]; r.object(v, "verification"))
    {
      r.only_keys(v, "verification",
                  {"lqr_oracle", "burgers_oracle", "gradient_check", "gradient_directions",
                   "gradient_eps", "dp_cross_check", "dp_state_nodes", "dp_control_nodes",
                   "dp_control_lo", "dp_control_hi", "dp_steps", "dp_lattice_points"});
      VerificationConfig &s = c.verification;
      r.boolean(v, "verification", "lqr_oracle", s.lqr_oracle);
      r.boolean(v, "verification", "burgers_oracle", s.burgers_oracle);
      r.boolean(v, "verification", "gradient_check", s.gradient_check);
      r.integer(v, "verification", "gradient_directions", s.gradient_directions);
      r.number(v, "verification", "gradient_eps", s.gradient_eps);
      r.boolean(v, "verification", "dp_cross_check", s.dp_cross_check);
      r.integer(v, "verification", "dp_state_nodes", s.dp_state_nodes);
      r.integer(v, "verification", "dp_control_nodes", s.dp_control_nodes);
      r.number(v, "verification", "dp_control_lo", s.dp_control_lo);
      r.number(v, "verification", "dp_control_hi", s.dp_control_hi);
      r.integer(v, "verification", "dp_steps", s.dp_steps);
      r.integer(v, "verification", "dp_lattice_points", s.dp_lattice_points);
    }
}

std::string fmt(double v)
{
  std::ostringstream os;
  os << v;
  return os.str();
}

bool all_finite(const Vec &v) { return v.allFinite(); }

bool writable_location(const fs::path &dir)
{
  std::error_code ec;
  fs::path p = fs::absolute(dir, ec);
  if (ec)
    return false;
  while (!p.empty() && !fs::exists(p, ec))
  {
    const fs::path parent = p.parent_path();
    if (parent == p)
      break;
    p = parent;
  }
  if (fs::exists(p, ec) && !fs::is_directory(p, ec))
    return false;
  return ::access(p.c_str(), W_OK) == 0;
}

} // namespace

ParsedConfig parse_config_text(const std::string &text)
{
  ParsedConfig out;
  Reader reader(out.violations);
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    out.violations.push_back(std::string("config: not valid JSON (") + e.what() + ")");
    return out;
  }
  parse_into(doc, out.config, reader);
  return out;
}

ParsedConfig load_config_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    ParsedConfig out;
    out.violations.push_back("config: cannot open '" + path + "'");
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::string> validate_config(const RunConfig &c,
                                         const std::optional<std::string> &output_override)
{
  std::vector<std::string> v;
  auto fail = [&](const std::string &path, const std::string &what) {
    v.push_back(path + ": " + what);
  };

  if (c.schema_version != kSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(c.schema_version) +
                               " (expected " + std::to_string(kSchemaVersion) + ")");

  // Problem.
  int N = 0, m = 0;
  const ProblemConfig &p = c.problem;
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon))
    fail("problem.horizon", "must be positive (got " + fmt(p.horizon) + ")");
  if (p.kind == "lqr")
  {
    try
    {
      p.lqr.validate();
      N = p.lqr.state_dim();
      m = p.lqr.control_dim();
    }
    catch (const std::exception &e)
    {
      fail("problem", e.what());
    }
  }
  else if (p.kind == "academic")
  {
    N = m = 1;
    try
    {
      (void)scalar_function(p.f, p.f_scale);
    }
    catch (const std::exception &e)
    {
      fail("problem.f", e.what());
    }
  }
  else if (p.kind == "zero")
  {
    if (p.state_dim < 1)
      fail("problem.state_dim", "must be positive");
    if (p.control_dim < 1)
      fail("problem.control_dim", "must be positive");
    N = p.state_dim;
    m = p.control_dim;
  }
  else
  {
    fail("problem.kind", "unknown problem '" + p.kind + "' (lqr, academic, zero)");
  }

  // Grid and time.
  const std::size_t gd = c.grid_nodes.size();
  if (gd == 0)
    fail("grid.nodes", "is required");
  if (static_cast<std::size_t>(c.grid_lo.size()) != gd ||
      static_cast<std::size_t>(c.grid_hi.size()) != gd)
    fail("grid", "lo, hi and nodes must have the same length");
  if (N > 0 && gd > 0 && gd != static_cast<std::size_t>(N))
    fail("grid", "dimension " + std::to_string(gd) + " does not match the state dimension " +
                     std::to_string(N));
  if (gd > static_cast<std::size_t>(kMaxGridDim))
    fail("grid", "at most " + std::to_string(kMaxGridDim) + " dimensions are supported");
  for (std::size_t d = 0; d < gd; ++d)
    if (c.grid_nodes[d] < 3)
      fail("grid.nodes", "axis " + std::to_string(d + 1) + " needs at least 3 nodes (got " +
                             std::to_string(c.grid_nodes[d]) + ")");
  const bool grid_shape_ok = gd > 0 && static_cast<std::size_t>(c.grid_lo.size()) == gd &&
                             static_cast<std::size_t>(c.grid_hi.size()) == gd;
  if (grid_shape_ok)
    for (std::size_t d = 0; d < gd; ++d)
      if (!(c.grid_lo[d] < c.grid_hi[d]) || !std::isfinite(c.grid_lo[d]) ||
          !std::isfinite(c.grid_hi[d]))
        fail("grid", "lo must be below hi on axis " + std::to_string(d + 1));
  if (c.time_steps < 1)
    fail("time_steps", "must be positive (got " + std::to_string(c.time_steps) + ")");

  // Constraint.
  const ConstraintConfig &k = c.constraint;
  bool compact = false;
  if (k.kind == "none")
  {
  }
  else if (k.kind == "box")
  {
    compact = true;
    if (k.lo.size() != m || k.hi.size() != m)
      fail("constraint", "box bounds must have the control dimension " + std::to_string(m));
    else if (!all_finite(k.lo) || !all_finite(k.hi) || !(k.lo.array() <= k.hi.array()).all())
      fail("constraint", "box needs finite lo <= hi");
  }
  else if (k.kind == "ball")
  {
    compact = true;
    if (k.center.size() != m)
      fail("constraint.center", "must have the control dimension " + std::to_string(m));
    if (!(k.radius > 0.0) || !std::isfinite(k.radius))
      fail("constraint.radius", "must be positive (got " + fmt(k.radius) + ")");
  }
  else
  {
    fail("constraint.kind", "unknown constraint '" + k.kind + "' (none, box, ball)");
  }

  // Descent settings.
  const DescentSettings &d = c.descent;
  DirectionMode mode = DirectionMode::kPoisson;
  try
  {
    mode = direction_mode_from_string(d.mode);
  }
  catch (const std::exception &)
  {
    fail("descent.mode", "unknown mode '" + d.mode + "' (obstacle, poisson, pointwise)");
  }
  if (mode == DirectionMode::kPoisson && compact)
    fail("descent.mode", "poisson mode requires an unconstrained control set");
  auto positive = [&](const char *path, double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      fail(path, "must be positive (got " + fmt(value) + ")");
  };
  positive("descent.tol", d.tol);
  positive("descent.eps_min", d.eps_min);
  positive("descent.eps_init", d.eps_init);
  positive("descent.eps_max", d.eps_max);
  positive("descent.obstacle_tol", d.obstacle_tol);
  positive("descent.poisson_tol", d.poisson_tol);
  if (d.eps_init < d.eps_min)
    fail("descent.eps_init", "must not be below eps_min");
  if (d.eps_max < d.eps_init)
    fail("descent.eps_max", "must not be below eps_init");
  if (mode != DirectionMode::kPoisson && d.eps_max > 1.0)
    fail("descent.eps_max", "must not exceed 1 for convex-combination updates");
  if (!(d.eps_growth >= 1.0))
    fail("descent.eps_growth", "must be at least 1");
  if (!(d.armijo_c1 > 0.0 && d.armijo_c1 < 1.0))
    fail("descent.armijo_c1", "must lie in (0, 1)");
  if (!(d.backtrack > 0.0 && d.backtrack < 1.0))
    fail("descent.backtrack", "must lie in (0, 1)");
  if (d.max_iterations < 0)
    fail("descent.max_iterations", "must not be negative");
  if (d.obstacle_max_iter < 1)
    fail("descent.obstacle_max_iter", "must be positive");
  if (!(d.relaxation > 0.0 && d.relaxation < 2.0))
    fail("descent.relaxation", "must lie in (0, 2)");
  if (d.hamiltonian_resolution < 2)
    fail("descent.hamiltonian_resolution", "must be at least 2");

  // Initial field.
  if (c.initial_field == "zero")
  {
    if (compact)
    {
      const Vec zero = Vec::Zero(m);
      bool inside = true;
      if (k.kind == "box" && k.lo.size() == m && k.hi.size() == m)
        inside = (k.lo.array() <= 0.0).all() && (k.hi.array() >= 0.0).all();
      if (k.kind == "ball" && k.center.size() == m)
        inside = k.center.norm() <= k.radius;
      if (!inside)
        fail("initial_field", "zero control is not in the constraint set");
    }
  }
  else if (c.initial_field == "riccati")
  {
    if (p.kind != "lqr")
      fail("initial_field", "riccati start needs an lqr problem");
  }
  else if (c.initial_field == "burgers")
  {
    if (p.kind != "academic")
      fail("initial_field", "burgers start needs an academic problem");
  }
  else
  {
    fail("initial_field", "unknown initial field '" + c.initial_field +
                              "' (zero, riccati, burgers)");
  }

  // Ensemble and measure box.
  const EnsembleConfig &e = c.ensemble;
  if (e.lo.size() != N || e.hi.size() != N || e.points.size() != static_cast<std::size_t>(N))
    fail("ensemble", "lo, hi and points must have the state dimension " + std::to_string(N));
  else
  {
    if (!(e.lo.array() <= e.hi.array()).all())
      fail("ensemble", "lo must not exceed hi");
    for (int pts : e.points)
      if (pts < 1)
        fail("ensemble.points", "must be positive");
  }
  if (e.times.empty())
    fail("ensemble.times", "needs at least one initial time");
  for (double t : e.times)
    if (!(t >= 0.0 && t < p.horizon))
      fail("ensemble.times", "initial time " + fmt(t) + " is outside [0, horizon)");

  const bool has_measure = c.measure_lo.size() > 0 || c.measure_hi.size() > 0;
  if (has_measure)
  {
    if (c.measure_lo.size() != N || c.measure_hi.size() != N)
      fail("measure", "lo and hi must have the state dimension " + std::to_string(N));
    else if (!(c.measure_lo.array() <= c.measure_hi.array()).all())
      fail("measure", "lo must not exceed hi");
    else if (grid_shape_ok && gd == static_cast<std::size_t>(N))
    {
      bool overlap = true;
      for (int i = 0; i < N; ++i)
        overlap = overlap && c.measure_hi[i] >= c.grid_lo[i] && c.measure_lo[i] <= c.grid_hi[i];
      if (!overlap)
        fail("measure", "box does not meet the grid");
    }
  }

  // Output and execution.
  const std::string out_dir = output_override ? *output_override : c.output_dir;
  if (out_dir.empty())
    fail("output_dir", "must not be empty");
  else if (!writable_location(out_dir))
    fail("output_dir", "'" + out_dir + "' is not writable");
  if (c.workers < 0)
    fail("workers", "must not be negative");

  // Verification.
  const VerificationConfig &ver = c.verification;
  if (ver.gradient_check)
  {
    if (ver.gradient_directions < 1)
      fail("verification.gradient_directions", "must be positive");
    positive("verification.gradient_eps", ver.gradient_eps);
  }
  if (ver.dp_cross_check)
  {
    if (N > 2)
      fail("verification.dp_cross_check", "dynamic programming supports at most 2 states");
    if (ver.dp_state_nodes < 3)
      fail("verification.dp_state_nodes", "needs at least 3 nodes");
    if (ver.dp_control_nodes < 1)
      fail("verification.dp_control_nodes", "must be positive");
    if (ver.dp_steps < 1)
      fail("verification.dp_steps", "must be positive");
    if (ver.dp_lattice_points < 1)
      fail("verification.dp_lattice_points", "must be positive");
    if (!(ver.dp_control_lo <= ver.dp_control_hi))
      fail("verification.dp_control_lo", "must not exceed dp_control_hi");
    if (!has_measure)
      fail("verification.dp_cross_check", "needs a measure box for the comparison lattice");
  }
  return v;
}

std::vector<std::string> validate_config_text(const std::string &text,
                                              const std::optional<std::string> &output_override)
{
  ParsedConfig parsed = parse_config_text(text);
  if (!parsed.violations.empty())
    return parsed.violations;
  return validate_config(parsed.config, output_override);
}

ControlProblem build_problem(const RunConfig &c)
{
  ControlProblem problem;
  if (c.problem.kind == "lqr")
    problem = lqr_to_problem(c.problem.lqr, c.problem.horizon);
  else if (c.problem.kind == "academic")
    problem = academic_problem(scalar_function(c.problem.f, c.problem.f_scale), c.problem.horizon);
  else if (c.problem.kind == "zero")
    problem = zero_cost_problem(c.problem.state_dim, c.problem.control_dim, c.problem.horizon);
  else
    throw InvalidArgument("unknown problem kind '" + c.problem.kind + "'");

  const ConstraintConfig &k = c.constraint;
  if (k.kind == "box")
    problem.constraint = ConstraintSet::box(k.lo, k.hi);
  else if (k.kind == "ball")
    problem.constraint = ConstraintSet::ball(k.center, k.radius);
  else
    problem.constraint = ConstraintSet::unconstrained(problem.control_dim);
  return problem;
}

namespace
{

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

void write_summary(const fs::path &dir, const ojson &summary)
{
  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << "\n";
  if (!out)
    throw std::runtime_error("cannot write " + (dir / "summary.json").string());
}

std::vector<Sample> ensemble_samples(const RunConfig &c)
{
  std::vector<Sample> samples;
  for (double t : c.ensemble.times)
  {
    const std::vector<Sample> s = lattice_samples(t, c.ensemble.lo, c.ensemble.hi, c.ensemble.points);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  return samples;
}

} // namespace

RunOutcome run(const RunConfig &c, const std::optional<std::string> &output_override,
               std::ostream *log)
{
  RunOutcome outcome;
  outcome.output_dir = output_override ? *output_override : c.output_dir;
  const std::vector<std::string> violations = validate_config(c, output_override);
  if (!violations.empty())
  {
    outcome.exit_code = kExitConfigError;
    outcome.status = "config_error";
    outcome.stage = "config";
    outcome.message = violations.front();
    if (log)
      for (const std::string &v : violations)
        *log << "config error: " << v << "\n";
    return outcome;
  }

  const fs::path dir(outcome.output_dir);
  ojson summary;
  summary["name"] = c.name;
  summary["problem"] = c.problem.kind;
  summary["mode"] = c.descent.mode;
  summary["constraint"] = c.constraint.kind;
  std::string stage = "setup";

  auto finish = [&](int code, const std::string &status, const std::string &message) {
    outcome.exit_code = code;
    outcome.status = status;
    outcome.stage = code == kExitConverged ? "done" : stage;
    outcome.message = message;
    summary["status"] = status;
    summary["stage"] = outcome.stage;
    summary["exit_code"] = code;
    summary["message"] = message;
    try
    {
      write_summary(dir, summary);
    }
    catch (const std::exception &e)
    {
      if (log)
        *log << "error: " << e.what() << "\n";
      outcome.exit_code = kExitFailure;
    }
    return outcome;
  };

  try
  {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
    {
      if (log)
        *log << "error: cannot create " << dir << ": " << ec.message() << "\n";
      outcome.exit_code = kExitFailure;
      outcome.status = "failed";
      outcome.stage = "setup";
      outcome.message = ec.message();
      return outcome;
    }

    const ControlProblem problem = build_problem(c);
    const Grid grid(c.grid_lo, c.grid_hi, c.grid_nodes);
    const TimeGrid time_grid(0.0, c.problem.horizon, c.time_steps);
    const std::vector<Sample> samples = ensemble_samples(c);
    const int workers = c.workers;
    const std::vector<std::size_t> measured = nodes_in_box(grid, c.measure_lo, c.measure_hi);
    const bool is_lqr = c.problem.kind == "lqr";
    const bool is_academic = c.problem.kind == "academic";

    std::optional<RiccatiSolution> riccati;
    std::optional<GridField> oracle_field;
    if (is_lqr)
    {
      stage = "riccati";
      riccati = solve_riccati(derive_lqr(c.problem.lqr), c.problem.horizon, std::max(c.time_steps, 10));
      write_table_csv(riccati_table(*riccati), (dir / "riccati.csv").string());
      const ClassicalRiccati classical =
          solve_classical_riccati(c.problem.lqr, c.problem.horizon, std::max(c.time_steps, 10));
      summary["riccati_consistency"] = number_or_null(gain_discrepancy(c.problem.lqr, *riccati, classical));
      if (riccati->F.size() == static_cast<std::size_t>(c.time_steps + 1))
        oracle_field = lqr_feedback_field(c.problem.lqr, *riccati, grid, time_grid);
    }
    std::optional<BurgersSolution> burgers;
    if (is_academic)
      burgers.emplace(scalar_function(c.problem.f, c.problem.f_scale), c.problem.horizon,
                      c.grid_lo[0], c.grid_hi[0]);

    stage = "setup";
    GridField u0(grid, time_grid, problem.control_dim);
    if (c.initial_field == "riccati")
    {
      if (!oracle_field)
        throw InvalidArgument("riccati start needs at least 10 time steps");
      u0 = *oracle_field;
    }
    else if (c.initial_field == "burgers")
    {
      u0 = academic_control_field(*burgers, grid, time_grid);
      if (!u0.all_finite())
        throw InvalidArgument("Burgers field is not classical on the whole horizon");
    }

    stage = "descent";
    DescentConfig dc;
    dc.mode = direction_mode_from_string(c.descent.mode);
    dc.samples = samples;
    dc.measure_lo = c.measure_lo;
    dc.measure_hi = c.measure_hi;
    dc.tol = c.descent.tol;
    dc.max_iterations = c.descent.max_iterations;
    dc.eps_init = c.descent.eps_init;
    dc.eps_min = c.descent.eps_min;
    dc.eps_max = c.descent.eps_max;
    dc.eps_growth = c.descent.eps_growth;
    dc.armijo_c1 = c.descent.armijo_c1;
    dc.backtrack = c.descent.backtrack;
    dc.obstacle.tol = c.descent.obstacle_tol;
    dc.obstacle.max_iter = c.descent.obstacle_max_iter;
    dc.obstacle.relaxation = c.descent.relaxation;
    dc.poisson.tol = c.descent.poisson_tol;
    dc.hamiltonian_resolution = c.descent.hamiltonian_resolution;
    dc.workers = workers;
    if (log)
      dc.on_iteration = [log](const IterationRecord &r) {
        *log << "iter " << r.iter << "  objective " << format_double(r.objective) << "  eps "
             << r.eps << "  residual " << r.residual << "\n";
      };
    const GridField initial = u0;
    DescentResult result = run_descent(problem, dc, std::move(u0));
    const DescentReport &rep = result.report;

    stage = "output";
    write_field_csv(result.u, (dir / "feedback.csv").string());
    write_field_metadata(result.u, (dir / "feedback.json").string(), "feedback control u(t,x)");
    write_field_csv(result.p, (dir / "costate.csv").string());
    write_field_csv(result.grad, (dir / "gradient.csv").string());
    write_table_csv(report_table(rep), (dir / "report.csv").string());

    double max_slice_inner = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (std::size_t i = 1; i < rep.iterations.size(); ++i)
    {
      max_slice_inner = std::max(max_slice_inner, rep.iterations[i].max_slice_inner);
      monotone = monotone && rep.iterations[i].objective <= rep.iterations[i - 1].objective + 1e-12;
    }
    summary["iterations"] = static_cast<int>(rep.iterations.size()) - 1;
    summary["final_objective"] = number_or_null(rep.final_objective);
    summary["final_residual"] = number_or_null(rep.final_residual);
    summary["initial_residual"] = number_or_null(rep.iterations.front().residual);
    summary["max_slice_descent_inner"] = rep.iterations.size() > 1 ? number_or_null(max_slice_inner) : ojson(nullptr);
    summary["objective_monotone"] = monotone;
    summary["max_cfl"] = number_or_null(rep.max_cfl);
    summary["cfl_warning"] = rep.max_cfl > 1.0;
    summary["samples"] = static_cast<int>(samples.size());
    summary["descent_seconds"] = rep.iterations.back().seconds;

    stage = "verification";
    if (is_lqr && c.verification.lqr_oracle)
    {
      const GainComparison cmp = compare_with_riccati(c.problem.lqr, *riccati, result.u, measured);
      summary["gain_error_vs_riccati"] = number_or_null(cmp.max_rel_error);
      summary["gain_error_time"] = cmp.time_of_max;
      summary["linear_fit_residual"] = number_or_null(cmp.max_fit_residual);
      if (oracle_field)
      {
        const CostateSolution ocs = solve_costate(problem, *oracle_field, {workers});
        const GridField og = gradient_field(problem, *oracle_field, ocs.p, workers);
        summary["oracle_residual"] = number_or_null(stationarity_residual(problem, *oracle_field, og, measured));
        summary["oracle_objective"] = number_or_null(ensemble_objective(problem, *oracle_field, samples, workers));
      }
    }
    if (is_academic && c.verification.burgers_oracle)
    {
      const GridField exact = academic_control_field(*burgers, grid, time_grid);
      double worst = 0.0;
      const double t_max = 0.9 * c.problem.horizon;
      bool defined = true;
      for (int k = 0; k < exact.slices() && time_grid.time(k) <= t_max + 1e-12; ++k)
        for (std::size_t node : measured)
        {
          const double e = exact(k, node, 0);
          defined = defined && std::isfinite(e);
          worst = std::max(worst, std::abs(result.u(k, node, 0) - e));
        }
      summary["feedback_error_vs_burgers"] = defined ? number_or_null(worst) : ojson(nullptr);
      if (exact.all_finite())
        summary["burgers_objective"] = number_or_null(ensemble_objective(problem, exact, samples, workers));
    }
    if (problem.constraint.compact())
      summary["hamiltonian_gap"] = number_or_null(
          hamiltonian_gap(problem, result.u, result.p, c.descent.hamiltonian_resolution));
    if (c.verification.gradient_check)
    {
      double worst = 0.0, worst_sample = 0.0;
      for (int i = 0; i < c.verification.gradient_directions; ++i)
      {
        const GridField bump = gaussian_bump_field(grid, time_grid, problem.control_dim,
                                                   c.seed + static_cast<unsigned>(i));
        const DerivativeCheck chk = directional_derivative_check(
            problem, initial, bump, samples, c.verification.gradient_eps, workers);
        worst = std::max(worst, chk.rel_err);
        worst_sample = std::max(worst_sample, chk.worst_sample_rel_err);
      }
      summary["gradient_check_worst_rel_err"] = number_or_null(worst);
      summary["gradient_check_worst_sample_rel_err"] = number_or_null(worst_sample);
    }
    if (c.verification.dp_cross_check)
    {
      const VerificationConfig &ver = c.verification;
      const int N = problem.state_dim;
      const Grid dp_grid(c.measure_lo, c.measure_hi, std::vector<int>(N, ver.dp_state_nodes));
      const TimeGrid dp_time(0.0, c.problem.horizon, ver.dp_steps);
      ConstraintSet lattice_set = problem.constraint;
      if (!lattice_set.compact())
        lattice_set = ConstraintSet::box(Vec::Constant(problem.control_dim, ver.dp_control_lo),
                                         Vec::Constant(problem.control_dim, ver.dp_control_hi));
      const std::vector<Vec> controls = control_lattice(lattice_set, ver.dp_control_nodes);
      const DPValue dp = dp_solve(problem, dp_grid, controls, dp_time, workers);
      const std::vector<Sample> lattice = lattice_samples(
          0.0, c.measure_lo, c.measure_hi, std::vector<int>(N, ver.dp_lattice_points));
      const double dp_value = dp_mean_value(dp, lattice);
      const double objective = ensemble_objective(problem, result.u, lattice, workers);
      summary["dp_value"] = number_or_null(dp_value);
      summary["objective_on_dp_lattice"] = number_or_null(objective);
      summary["objective_gap_vs_dp"] =
          number_or_null(std::abs(objective - dp_value) / std::max(std::abs(dp_value), 1e-300));
    }

    if (rep.status != DescentStatus::kConverged)
      stage = "descent";
    switch (rep.status)
    {
    case DescentStatus::kConverged:
      return finish(kExitConverged, "converged", rep.message);
    case DescentStatus::kStalled:
      return finish(kExitStalled, "stalled", rep.message);
    case DescentStatus::kMaxIterations:
      return finish(kExitMaxIterations, "max_iterations", rep.message);
    }
    return finish(kExitFailure, "failed", "unknown descent status");
  }
  catch (const BlowUpError &e)
  {
    summary["blowup_time"] = number_or_null(e.time());
    if (log)
      *log << "blow-up: " << e.what() << "\n";
    return finish(kExitBlowUp, "blow_up", e.what());
  }
  catch (const std::exception &e)
  {
    if (log)
      *log << "error: " << e.what() << "\n";
    return finish(kExitFailure, "failed", e.what());
  }
}

RunOutcome run_config_text(const std::string &text,
                           const std::optional<std::string> &output_override, std::ostream *log)
{
  ParsedConfig parsed = parse_config_text(text);
  if (!parsed.violations.empty())
  {
    RunOutcome outcome;
    outcome.exit_code = kExitConfigError;
    outcome.status = "config_error";
    outcome.stage = "config";
    outcome.message = parsed.violations.front();
    outcome.output_dir = output_override ? *output_override : parsed.config.output_dir;
    if (log)
      for (const std::string &v : parsed.violations)
        *log << "config error: " << v << "\n";
    return outcome;
  }
  return run(parsed.config, output_override, log);
}

} // namespace feedsynth
