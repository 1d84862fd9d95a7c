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

#include "feedsynth/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/SVD>

#include "feedsynth/errors.hpp"

namespace feedsynth
{

namespace
{

template <class Rhs>
std::vector<Mat> backward_rk4(const Mat &terminal, const TimeGrid &tg, Rhs &&rhs, const char *name)
{
  std::vector<Mat> out(tg.steps() + 1);
  out[tg.steps()] = terminal;
  const double h = -tg.dt();
  for (int k = tg.steps(); k > 0; --k)
  {
    const double t = tg.time(k);
    const Mat &Y = out[k];
    const Mat k1 = rhs(Y);
    const Mat k2 = rhs(Y + 0.5 * h * k1);
    const Mat k3 = rhs(Y + 0.5 * h * k2);
    const Mat k4 = rhs(Y + h * k3);
    out[k - 1] = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out[k - 1].allFinite())
    {
      std::ostringstream os;
      os << name << " blew up between t=" << tg.time(k - 1) << " and t=" << t;
      throw BlowUpError(os.str(), tg.time(k - 1));
    }
  }
  return out;
}

Mat interpolate_nodes(const TimeGrid &tg, const std::vector<Mat> &values, double t)
{
  int slice;
  double frac;
  tg.locate(t, slice, frac);
  if (frac == 0.0)
    return values[slice];
  return (1.0 - frac) * values[slice] + frac * values[slice + 1];
}

} // namespace

LQRDerived derive_lqr(const LQRSpec &spec)
{
  spec.validate();
  const Mat BRB = spec.B * spec.R.llt().solve(spec.B.transpose());
  LQRDerived d;
  d.C = BRB.inverse();
  d.C = 0.5 * (d.C + d.C.transpose());
  d.D = spec.H - d.C * spec.A;
  d.E = spec.Q + spec.A.transpose() * d.C * spec.A;
  d.E = 0.5 * (d.E + d.E.transpose());
  return d;
}

Mat RiccatiSolution::at(double t) const { return interpolate_nodes(time_grid, F, t); }

RiccatiSolution solve_riccati(const LQRDerived &derived, double horizon, int steps,
                              bool include_skew_term)
{
  if (steps < 10)
    throw InvalidArgument("Riccati integration needs at least 10 steps");
  if (!(horizon > 0.0))
    throw InvalidArgument("horizon must be positive");
  const Eigen::PartialPivLU<Mat> Clu(derived.C);
  const Mat CinvE = Clu.solve(derived.E);
  const Mat S = include_skew_term ? Mat(Clu.solve(Mat(derived.D.transpose() - derived.D)))
                                  : Mat::Zero(derived.C.rows(), derived.C.cols());
  const Mat terminal = -Clu.solve(derived.D);

  TimeGrid tg(0.0, horizon, steps);
  // F' = C^-1 E + C^-1 (D' - D) F - F^2
  auto rhs = [&](const Mat &F) -> Mat { return CinvE + S * F - F * F; };
  return RiccatiSolution{tg, backward_rk4(terminal, tg, rhs, "Riccati solution")};
}

Mat lqr_gain(const LQRSpec &spec, const RiccatiSolution &riccati, double t)
{
  const Mat BRB = spec.B * spec.R.llt().solve(spec.B.transpose());
  const Mat CFA = BRB.partialPivLu().solve(Mat(riccati.at(t) - spec.A));
  return spec.R.llt().solve(Mat(spec.B.transpose() * CFA));
}

Vec lqr_feedback(const LQRSpec &spec, const RiccatiSolution &riccati, double t, const Vec &y)
{
  return lqr_gain(spec, riccati, t) * y;
}

GridField lqr_feedback_field(const LQRSpec &spec, const RiccatiSolution &riccati,
                             const Grid &grid, const TimeGrid &time_grid)
{
  const int N = spec.state_dim();
  const int m = spec.control_dim();
  if (grid.dim() != N)
    throw InvalidArgument("grid dimension does not match the state dimension");
  GridField field(grid, time_grid, m);
  Vec x(N);
  for (int k = 0; k < field.slices(); ++k)
  {
    const Mat K = lqr_gain(spec, riccati, time_grid.time(k));
    for (std::size_t node = 0; node < grid.node_count(); ++node)
    {
      grid.node_into(node, x.data());
      const Vec u = K * x;
      for (int c = 0; c < m; ++c)
        field(k, node, c) = u[c];
    }
  }
  return field;
}

CsvTable riccati_table(const RiccatiSolution &riccati)
{
  CsvTable table;
  const int N = static_cast<int>(riccati.F.front().rows());
  table.header.push_back("t");
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      table.header.push_back("F" + std::to_string(i + 1) + std::to_string(j + 1));
  for (int k = 0; k <= riccati.time_grid.steps(); ++k)
  {
    std::vector<double> row{riccati.time_grid.time(k)};
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        row.push_back(riccati.F[k](i, j));
    table.rows.push_back(std::move(row));
  }
  return table;
}

Mat ClassicalRiccati::at(double t) const { return interpolate_nodes(time_grid, P, t); }

ClassicalRiccati solve_classical_riccati(const LQRSpec &spec, double horizon, int steps)
{
  if (steps < 10)
    throw InvalidArgument("Riccati integration needs at least 10 steps");
  if (!(horizon > 0.0))
    throw InvalidArgument("horizon must be positive");
  const Mat BRB = spec.B * spec.R.llt().solve(spec.B.transpose());
  const Mat &A = spec.A;
  const Mat &Q = spec.Q;
  auto rhs = [&](const Mat &P) -> Mat {
    return -(A.transpose() * P + P * A + Q - P * BRB * P);
  };
  TimeGrid tg(0.0, horizon, steps);
  return ClassicalRiccati{tg, backward_rk4(spec.H, tg, rhs, "classical Riccati solution")};
}

Mat classical_gain(const LQRSpec &spec, const ClassicalRiccati &riccati, double t)
{
  return -spec.R.llt().solve(Mat(spec.B.transpose() * riccati.at(t)));
}

double gain_discrepancy(const LQRSpec &spec, const RiccatiSolution &riccati,
                        const ClassicalRiccati &classical)
{
  double worst = 0.0;
  const TimeGrid &tg = riccati.time_grid;
  for (int k = 0; k <= tg.steps(); ++k)
  {
    const double t = tg.time(k);
    const Mat K = lqr_gain(spec, riccati, t);
    const Mat Kc = classical_gain(spec, classical, t);
    worst = std::max(worst, (K - Kc).norm() / std::max(Kc.norm(), 1.0));
  }
  return worst;
}

LinearFit fit_linear_gain(const GridField &field, int time_index,
                          const std::vector<std::size_t> &nodes)
{
  const Grid &grid = field.grid();
  const int N = grid.dim();
  const int m = field.components();
  if (nodes.size() < static_cast<std::size_t>(N))
    throw InvalidArgument("too few nodes for a linear fit");
  Mat X(nodes.size(), N), Y(nodes.size(), m);
  for (std::size_t r = 0; r < nodes.size(); ++r)
  {
    for (int d = 0; d < N; ++d)
      X(r, d) = grid.coord(d, grid.axis_index(nodes[r], d));
    for (int c = 0; c < m; ++c)
      Y(r, c) = field(time_index, nodes[r], c);
  }
  LinearFit fit;
  fit.K = X.colPivHouseholderQr().solve(Y).transpose();
  const double ynorm = Y.norm();
  fit.residual_ratio = ynorm > 0.0 ? (Y - X * fit.K.transpose()).norm() / ynorm : 0.0;
  return fit;
}

GainComparison compare_with_riccati(const LQRSpec &spec, const RiccatiSolution &riccati,
                                    const GridField &field,
                                    const std::vector<std::size_t> &nodes,
                                    double horizon_fraction)
{
  GainComparison out;
  const TimeGrid &tg = field.time_grid();
  const double t_max = tg.t0() + horizon_fraction * (tg.t1() - tg.t0());
  for (int k = 0; k < field.slices(); ++k)
  {
    const double t = tg.time(k);
    if (t > t_max + 1e-12 * (tg.t1() - tg.t0()))
      break;
    const LinearFit fit = fit_linear_gain(field, k, nodes);
    const Mat K = lqr_gain(spec, riccati, t);
    out.max_fit_residual = std::max(out.max_fit_residual, fit.residual_ratio);
    if (K.norm() == 0.0)
      continue;
    const double err = (fit.K - K).norm() / K.norm();
    if (err > out.max_rel_error)
    {
      out.max_rel_error = err;
      out.time_of_max = t;
    }
  }
  return out;
}

LQRSpec random_lqr_spec(int dim, unsigned seed, double max_condition)
{
  if (dim < 1)
    throw InvalidArgument("dimension must be positive");
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.5, 2.0);
  auto gaussian = [&](int r, int c, double scale) {
    Mat M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        M(i, j) = scale * normal(rng);
    return M;
  };
  for (int attempt = 0; attempt < 1000; ++attempt)
  {
    LQRSpec spec;
    spec.A = gaussian(dim, dim, 0.5);
    spec.B = Mat::Identity(dim, dim) + gaussian(dim, dim, 0.3);
    spec.R = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
      spec.R(i, i) = unit(rng);
    const Mat L = gaussian(dim, dim, 1.0);
    spec.Q = L * L.transpose() / dim + 0.5 * Mat::Identity(dim, dim);
    const Mat M = gaussian(dim, dim, 1.0);
    spec.H = 0.5 * M * M.transpose() / dim;
    const Mat BRB = spec.B * spec.R.llt().solve(spec.B.transpose());
    Eigen::JacobiSVD<Mat> svd(BRB);
    const auto &sv = svd.singularValues();
    if (sv[dim - 1] > 0.0 && sv[0] / sv[dim - 1] <= max_condition)
      return spec;
  }
  throw InvalidArgument("could not draw a spec within the condition bound");
}

} // namespace feedsynth
