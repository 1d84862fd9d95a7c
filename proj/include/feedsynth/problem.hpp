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

#ifndef FEEDSYNTH_PROBLEM_HPP_
#define FEEDSYNTH_PROBLEM_HPP_

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace feedsynth
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/**
 * @brief Feasible set K for the control variable.
 *
 * Box and ball sets are compact and convex; projection is the Euclidean one
 * and is exact (clamping / radial scaling), so membership tests after a
 * projection never fail.
 */
class ConstraintSet
{
public:
  enum class Kind { kUnconstrained, kBox, kBall };

  static ConstraintSet unconstrained(int dim);
  static ConstraintSet box(Vec lo, Vec hi);
  static ConstraintSet ball(Vec center, double radius);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool compact() const { return kind_ != Kind::kUnconstrained; }

  Vec project(const Vec &v) const;
  /// In-place projection of a length-dim() array.
  void project_inplace(double *v) const;
  bool contains(const Vec &v) const;
  bool contains(const double *v) const;

  const Vec &lo() const { return lo_; }
  const Vec &hi() const { return hi_; }
  const Vec &center() const { return center_; }
  double radius() const { return radius_; }

  std::string describe() const;

private:
  ConstraintSet() = default;

  Kind kind_ = Kind::kUnconstrained;
  int dim_ = 0;
  Vec lo_, hi_, center_;
  double radius_ = 0.0;
};

/**
 * @brief A finite-horizon control problem
 *
 *   minimize  int_t^T F(x, u) ds + g(x(T)),   x' = f(x, u),  u in K.
 *
 * All callbacks must be thread-safe; the solvers call them concurrently.
 * An empty terminal_cost means g == 0 (the convention used when the terminal
 * contribution has been folded into F).
 */
struct ControlProblem
{
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  double horizon = 1.0;

  std::function<Vec(const Vec &, const Vec &)> dynamics;
  std::function<Mat(const Vec &, const Vec &)> dynamics_jac_x;
  std::function<Mat(const Vec &, const Vec &)> dynamics_jac_u;

  std::function<double(const Vec &, const Vec &)> running_cost;
  std::function<Vec(const Vec &, const Vec &)> running_cost_grad_x;
  std::function<Vec(const Vec &, const Vec &)> running_cost_grad_u;

  std::function<double(const Vec &)> terminal_cost;
  std::function<Vec(const Vec &)> terminal_cost_grad;

  ConstraintSet constraint = ConstraintSet::unconstrained(1);

  bool has_terminal_cost() const { return static_cast<bool>(terminal_cost); }
  double g(const Vec &x) const { return terminal_cost ? terminal_cost(x) : 0.0; }
  Vec grad_g(const Vec &x) const
  {
    return terminal_cost_grad ? terminal_cost_grad(x) : Vec::Zero(state_dim);
  }
};

/// Scalar map with derivative, used by the academic example and Burgers data.
struct ScalarFunction
{
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Named scalar maps: identity, neg_identity, zero, tanh, neg_tanh, sin, neg_sin.
ScalarFunction scalar_function(const std::string &name, double scale = 1.0);

/// Linear dynamics f = Ax + Bu with quadratic costs and terminal weight H.
struct LQRSpec
{
  Mat A, B, Q, R, H;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }

  /// Throws InvalidArgument when shapes, definiteness or invertibility of
  /// B R^-1 B' fail.
  void validate() const;
};

/**
 * LQR problem with the terminal weight folded into the running cost:
 *   F(x,u) = x'A'Hx + u'B'Hx + x'Qx/2 + u'Ru/2,  f = Ax + Bu,  g = 0.
 */
ControlProblem lqr_to_problem(const LQRSpec &spec, double horizon);

/// N = m = 1: F = u^2/2 - f(x)^2/2, dynamics f(x) + u, g = 0.
ControlProblem academic_problem(const ScalarFunction &f, double horizon);

/// F = 0, f = 0, g = 0 in the requested dimensions.
ControlProblem zero_cost_problem(int state_dim, int control_dim, double horizon);

/// Largest relative error between the derivative callbacks and central
/// finite differences of the base maps at (x, u).
double derivative_consistency_error(const ControlProblem &problem, const Vec &x, const Vec &u,
                                    double step = 1e-6);

} // namespace feedsynth

#endif // FEEDSYNTH_PROBLEM_HPP_
