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

#include "feedsynth/problem.hpp"

#include <cmath>
#include <sstream>

#include "feedsynth/errors.hpp"

namespace feedsynth
{

ConstraintSet ConstraintSet::unconstrained(int dim)
{
  if (dim <= 0)
    throw InvalidArgument("constraint dimension must be positive");
  ConstraintSet set;
  set.kind_ = Kind::kUnconstrained;
  set.dim_ = dim;
  return set;
}

ConstraintSet ConstraintSet::box(Vec lo, Vec hi)
{
  if (lo.size() == 0 || lo.size() != hi.size())
    throw InvalidArgument("box bounds must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
      throw InvalidArgument("box bounds must be finite with lo <= hi");
  }
  ConstraintSet set;
  set.kind_ = Kind::kBox;
  set.dim_ = static_cast<int>(lo.size());
  set.lo_ = std::move(lo);
  set.hi_ = std::move(hi);
  return set;
}

ConstraintSet ConstraintSet::ball(Vec center, double radius)
{
  if (center.size() == 0 || !(radius > 0.0) || !std::isfinite(radius))
    throw InvalidArgument("ball needs a non-empty center and a finite radius > 0");
  ConstraintSet set;
  set.kind_ = Kind::kBall;
  set.dim_ = static_cast<int>(center.size());
  set.center_ = std::move(center);
  set.radius_ = radius;
  return set;
}

void ConstraintSet::project_inplace(double *v) const
{
  switch (kind_) {
  case Kind::kUnconstrained:
    return;
  case Kind::kBox:
    for (int i = 0; i < dim_; ++i)
      v[i] = std::min(std::max(v[i], lo_[i]), hi_[i]);
    return;
  case Kind::kBall: {
    double norm2 = 0.0;
    for (int i = 0; i < dim_; ++i)
      norm2 += (v[i] - center_[i]) * (v[i] - center_[i]);
    const double norm = std::sqrt(norm2);
    if (norm <= radius_)
      return;
    const double scale = radius_ / norm;
    for (int i = 0; i < dim_; ++i)
      v[i] = center_[i] + (v[i] - center_[i]) * scale;
    // Rounding can leave the scaled point a few ulps outside; pull it in.
    while (!contains(v)) {
      for (int i = 0; i < dim_; ++i)
        v[i] = center_[i] + (v[i] - center_[i]) * (1.0 - 4.0 * 1e-16);
    }
    return;
  }
  }
}

Vec ConstraintSet::project(const Vec &v) const
{
  Vec out = v;
  project_inplace(out.data());
  return out;
}

bool ConstraintSet::contains(const double *v) const
{
  switch (kind_) {
  case Kind::kUnconstrained:
    return true;
  case Kind::kBox:
    for (int i = 0; i < dim_; ++i) {
      if (!(v[i] >= lo_[i] && v[i] <= hi_[i]))
        return false;
    }
    return true;
  case Kind::kBall: {
    double norm2 = 0.0;
    for (int i = 0; i < dim_; ++i)
      norm2 += (v[i] - center_[i]) * (v[i] - center_[i]);
    return std::sqrt(norm2) <= radius_;
  }
  }
  return false;
}

bool ConstraintSet::contains(const Vec &v) const { return contains(v.data()); }

std::string ConstraintSet::describe() const
{
  std::ostringstream os;
  switch (kind_) {
  case Kind::kUnconstrained:
    os << "unconstrained(" << dim_ << ")";
    break;
  case Kind::kBox:
    os << "box[" << lo_.transpose() << " ; " << hi_.transpose() << "]";
    break;
  case Kind::kBall:
    os << "ball(" << center_.transpose() << " ; r=" << radius_ << ")";
    break;
  }
  return os.str();
}

ScalarFunction scalar_function(const std::string &name, double scale)
{
  const double s = scale;
  if (name == "identity")
    return {name, [s](double x) { return s * x; }, [s](double) { return s; }};
  if (name == "neg_identity")
    return {name, [s](double x) { return -s * x; }, [s](double) { return -s; }};
  if (name == "zero")
    return {name, [](double) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "tanh")
    return {name, [s](double x) { return s * std::tanh(x); },
            [s](double x) { const double c = std::cosh(x); return s / (c * c); }};
  if (name == "neg_tanh")
    return {name, [s](double x) { return -s * std::tanh(x); },
            [s](double x) { const double c = std::cosh(x); return -s / (c * c); }};
  if (name == "sin")
    return {name, [s](double x) { return s * std::sin(x); },
            [s](double x) { return s * std::cos(x); }};
  if (name == "neg_sin")
    return {name, [s](double x) { return -s * std::sin(x); },
            [s](double x) { return -s * std::cos(x); }};
  throw InvalidArgument("unknown scalar function '" + name + "'");
}

namespace
{

bool is_symmetric(const Mat &m, double tol = 1e-12)
{
  return m.rows() == m.cols() &&
         (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

bool is_psd(const Mat &m)
{
  Eigen::SelfAdjointEigenSolver<Mat> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

} // namespace

void LQRSpec::validate() const
{
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (n == 0 || A.cols() != n || B.rows() != n || m == 0)
    throw InvalidArgument("LQR: A must be NxN and B Nxm with N, m > 0");
  if (Q.rows() != n || Q.cols() != n || H.rows() != n || H.cols() != n)
    throw InvalidArgument("LQR: Q and H must be NxN");
  if (R.rows() != m || R.cols() != m)
    throw InvalidArgument("LQR: R must be mxm");
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite() || !H.allFinite())
    throw InvalidArgument("LQR: non-finite matrix entry");
  if (!is_symmetric(R) || R.llt().info() != Eigen::Success)
    throw InvalidArgument("LQR: R must be symmetric positive definite");
  if (!is_symmetric(Q) || !is_psd(Q))
    throw InvalidArgument("LQR: Q must be symmetric positive semidefinite");
  if (!is_symmetric(H) || !is_psd(H))
    throw InvalidArgument("LQR: H must be symmetric positive semidefinite");
  const Mat S = B * R.llt().solve(B.transpose());
  Eigen::FullPivLU<Mat> lu(S);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw InvalidArgument("LQR: B R^-1 B' is singular; the closed-form feedback does not apply");
}

ControlProblem lqr_to_problem(const LQRSpec &spec, double horizon)
{
  spec.validate();
  if (!(horizon > 0.0))
    throw InvalidArgument("horizon must be positive");
  const Mat A = spec.A, B = spec.B, Q = spec.Q, R = spec.R, H = spec.H;
  const Mat AtH = A.transpose() * H;
  const Mat BtH = B.transpose() * H;

  ControlProblem p;
  p.name = "lqr";
  p.state_dim = spec.state_dim();
  p.control_dim = spec.control_dim();
  p.horizon = horizon;
  p.dynamics = [A, B](const Vec &x, const Vec &u) -> Vec { return A * x + B * u; };
  p.dynamics_jac_x = [A](const Vec &, const Vec &) -> Mat { return A; };
  p.dynamics_jac_u = [B](const Vec &, const Vec &) -> Mat { return B; };
  p.running_cost = [AtH, BtH, Q, R](const Vec &x, const Vec &u) {
    return x.dot(AtH * x) + u.dot(BtH * x) + 0.5 * x.dot(Q * x) + 0.5 * u.dot(R * u);
  };
  p.running_cost_grad_x = [AtH, BtH, Q](const Vec &x, const Vec &u) -> Vec {
    return (AtH + AtH.transpose()) * x + BtH.transpose() * u + Q * x;
  };
  p.running_cost_grad_u = [BtH, R](const Vec &x, const Vec &u) -> Vec {
    return BtH * x + R * u;
  };
  p.constraint = ConstraintSet::unconstrained(p.control_dim);
  return p;
}

ControlProblem academic_problem(const ScalarFunction &f, double horizon)
{
  if (!(horizon > 0.0))
    throw InvalidArgument("horizon must be positive");
  auto fv = f.value;
  auto fd = f.derivative;
  ControlProblem p;
  p.name = "academic:" + f.name;
  p.state_dim = 1;
  p.control_dim = 1;
  p.horizon = horizon;
  p.dynamics = [fv](const Vec &x, const Vec &u) -> Vec { return Vec::Constant(1, fv(x[0]) + u[0]); };
  p.dynamics_jac_x = [fd](const Vec &x, const Vec &) -> Mat { return Mat::Constant(1, 1, fd(x[0])); };
  p.dynamics_jac_u = [](const Vec &, const Vec &) -> Mat { return Mat::Identity(1, 1); };
  p.running_cost = [fv](const Vec &x, const Vec &u) {
    const double fx = fv(x[0]);
    return 0.5 * u[0] * u[0] - 0.5 * fx * fx;
  };
  p.running_cost_grad_x = [fv, fd](const Vec &x, const Vec &) -> Vec {
    return Vec::Constant(1, -fv(x[0]) * fd(x[0]));
  };
  p.running_cost_grad_u = [](const Vec &, const Vec &u) -> Vec { return u; };
  p.constraint = ConstraintSet::unconstrained(1);
  return p;
}

ControlProblem zero_cost_problem(int state_dim, int control_dim, double horizon)
{
  if (state_dim <= 0 || control_dim <= 0 || !(horizon > 0.0))
    throw InvalidArgument("zero problem needs positive dimensions and horizon");
  ControlProblem p;
  p.name = "zero";
  p.state_dim = state_dim;
  p.control_dim = control_dim;
  p.horizon = horizon;
  const int n = state_dim, m = control_dim;
  p.dynamics = [n](const Vec &, const Vec &) -> Vec { return Vec::Zero(n); };
  p.dynamics_jac_x = [n](const Vec &, const Vec &) -> Mat { return Mat::Zero(n, n); };
  p.dynamics_jac_u = [n, m](const Vec &, const Vec &) -> Mat { return Mat::Zero(n, m); };
  p.running_cost = [](const Vec &, const Vec &) { return 0.0; };
  p.running_cost_grad_x = [n](const Vec &, const Vec &) -> Vec { return Vec::Zero(n); };
  p.running_cost_grad_u = [m](const Vec &, const Vec &) -> Vec { return Vec::Zero(m); };
  p.constraint = ConstraintSet::unconstrained(m);
  return p;
}

double derivative_consistency_error(const ControlProblem &problem, const Vec &x, const Vec &u,
                                    double step)
{
  auto rel = [](double analytic, double fd) {
    return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1.0});
  };
  double worst = 0.0;
  const Mat fx = problem.dynamics_jac_x(x, u);
  const Mat fu = problem.dynamics_jac_u(x, u);
  const Vec Fx = problem.running_cost_grad_x(x, u);
  const Vec Fu = problem.running_cost_grad_u(x, u);

  for (int j = 0; j < problem.state_dim; ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    const Vec dfd = (problem.dynamics(xp, u) - problem.dynamics(xm, u)) / (2.0 * step);
    for (int i = 0; i < problem.state_dim; ++i)
      worst = std::max(worst, rel(fx(i, j), dfd[i]));
    const double dF = (problem.running_cost(xp, u) - problem.running_cost(xm, u)) / (2.0 * step);
    worst = std::max(worst, rel(Fx[j], dF));
    if (problem.has_terminal_cost()) {
      const double dg = (problem.terminal_cost(xp) - problem.terminal_cost(xm)) / (2.0 * step);
      worst = std::max(worst, rel(problem.terminal_cost_grad(x)[j], dg));
    }
  }
  for (int j = 0; j < problem.control_dim; ++j) {
    Vec up = u, um = u;
    up[j] += step;
    um[j] -= step;
    const Vec dfd = (problem.dynamics(x, up) - problem.dynamics(x, um)) / (2.0 * step);
    for (int i = 0; i < problem.state_dim; ++i)
      worst = std::max(worst, rel(fu(i, j), dfd[i]));
    const double dF = (problem.running_cost(x, up) - problem.running_cost(x, um)) / (2.0 * step);
    worst = std::max(worst, rel(Fu[j], dF));
  }
  return worst;
}

} // namespace feedsynth
