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

#ifndef FEEDSYNTH_RUNNER_HPP_
#define FEEDSYNTH_RUNNER_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "feedsynth/descent.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

inline constexpr int kSchemaVersion = 1;

/// Process exit codes of `run`.
enum ExitCode : int
{
  kExitConverged = 0,
  kExitFailure = 1,
  kExitConfigError = 2,
  kExitStalled = 3,
  kExitBlowUp = 4,
  kExitMaxIterations = 5,
};

struct ProblemConfig
{
  /// lqr | academic | zero
  std::string kind = "lqr";
  double horizon = 1.0;
  LQRSpec lqr;
  std::string f = "neg_identity";
  double f_scale = 1.0;
  int state_dim = 1;
  int control_dim = 1;
};

struct ConstraintConfig
{
  /// none | box | ball
  std::string kind = "none";
  Vec lo, hi, center;
  double radius = 0.0;
};

struct DescentSettings
{
  std::string mode = "poisson";
  double tol = 1e-3;
  int max_iterations = 200;
  double eps_init = 1.0;
  double eps_min = 1e-8;
  double eps_max = 1.0;
  double eps_growth = 2.0;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double obstacle_tol = 1e-9;
  int obstacle_max_iter = 200000;
  double relaxation = 1.8;
  double poisson_tol = 1e-12;
  int hamiltonian_resolution = 21;
};

struct EnsembleConfig
{
  Vec lo, hi;
  std::vector<int> points;
  std::vector<double> times{0.0};
};

struct VerificationConfig
{
  bool lqr_oracle = true;
  bool burgers_oracle = true;
  bool gradient_check = false;
  int gradient_directions = 3;
  double gradient_eps = 1e-4;
  bool dp_cross_check = false;
  int dp_state_nodes = 201;
  int dp_control_nodes = 201;
  double dp_control_lo = -1.0;
  double dp_control_hi = 1.0;
  int dp_steps = 200;
  /// Initial states at t0 on the measure box used for the DP comparison.
  int dp_lattice_points = 21;
};

struct RunConfig
{
  int schema_version = kSchemaVersion;
  std::string name = "run";
  ProblemConfig problem;
  Vec grid_lo, grid_hi;
  std::vector<int> grid_nodes;
  int time_steps = 100;
  ConstraintConfig constraint;
  /// zero | riccati | burgers
  std::string initial_field = "zero";
  DescentSettings descent;
  EnsembleConfig ensemble;
  Vec measure_lo, measure_hi;
  std::string output_dir = "out";
  unsigned seed = 1;
  /// 0 selects the number of hardware threads.
  int workers = 0;
  VerificationConfig verification;
};

struct ParsedConfig
{
  RunConfig config;
  /// Structural problems found while reading (unknown keys, wrong types).
  std::vector<std::string> violations;
};

ParsedConfig parse_config_text(const std::string &text);
ParsedConfig load_config_file(const std::string &path);

/// Every reason the run would refuse to start, in a fixed order; empty means
/// the run would start. `output_override` replaces the configured directory.
std::vector<std::string> validate_config(const RunConfig &config,
                                         const std::optional<std::string> &output_override = {});

/// Parse plus validation in one list.
std::vector<std::string> validate_config_text(const std::string &text,
                                              const std::optional<std::string> &output_override = {});

ControlProblem build_problem(const RunConfig &config);

struct RunOutcome
{
  int exit_code = kExitFailure;
  std::string status;
  /// Stage that ended the run: config, setup, riccati, descent, output or
  /// verification ("done" on success).
  std::string stage;
  std::string message;
  std::string output_dir;
};

/**
 * Runs the configured pipeline and writes feedback.csv (+ .json layout),
 * costate.csv, gradient.csv, report.csv, summary.json and, for LQR
 * problems, riccati.csv. A configuration error writes nothing. Progress
 * lines go to `log` when given.
 */
RunOutcome run(const RunConfig &config, const std::optional<std::string> &output_override = {},
               std::ostream *log = nullptr);

/// Parses, validates and runs; violations are written to `log`.
RunOutcome run_config_text(const std::string &text,
                           const std::optional<std::string> &output_override = {},
                           std::ostream *log = nullptr);

} // namespace feedsynth

#endif // FEEDSYNTH_RUNNER_HPP_
