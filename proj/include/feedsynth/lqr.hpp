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

#ifndef FEEDSYNTH_LQR_HPP_
#define FEEDSYNTH_LQR_HPP_

#include <vector>

#include "feedsynth/field_io.hpp"
#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

/// C = (B R^-1 B')^-1,  D = H - CA,  E = Q + A'CA.
struct LQRDerived
{
  Mat C, D, E;
};

/// Throws InvalidArgument for specs that fail LQRSpec::validate.
LQRDerived derive_lqr(const LQRSpec &spec);

/**
 * @brief Optimal closed-loop velocity matrix F(t), x' = F(t) x.
 *
 * Stored at the nodes of a uniform time grid; F(T) = -C^-1 D is stored
 * exactly. Between nodes F is linear in t.
 */
struct RiccatiSolution
{
  TimeGrid time_grid;
  std::vector<Mat> F;

  Mat at(double t) const;
};

/**
 * Backward RK4 for
 *   F' + F^2 = C^-1 E + C^-1 (D' - D) F,   F(T) = -C^-1 D.
 * The (D' - D) term vanishes when CA is symmetric (always in 1-D). Setting
 * `include_skew_term` to false drops it, which is only correct in that case.
 * Throws BlowUpError with the failing time on non-finite entries.
 */
RiccatiSolution solve_riccati(const LQRDerived &derived, double horizon, int steps,
                              bool include_skew_term = true);

/// K(t) = R^-1 B' C (F(t) - A), so that u = K(t) y.
Mat lqr_gain(const LQRSpec &spec, const RiccatiSolution &riccati, double t);

Vec lqr_feedback(const LQRSpec &spec, const RiccatiSolution &riccati, double t, const Vec &y);

GridField lqr_feedback_field(const LQRSpec &spec, const RiccatiSolution &riccati,
                             const Grid &grid, const TimeGrid &time_grid);

/// Rows t, F11, F12, ..., FNN (row-major).
CsvTable riccati_table(const RiccatiSolution &riccati);

/// Textbook Riccati -P' = A'P + PA + Q - P B R^-1 B' P, P(T) = H.
struct ClassicalRiccati
{
  TimeGrid time_grid;
  std::vector<Mat> P;

  Mat at(double t) const;
};

ClassicalRiccati solve_classical_riccati(const LQRSpec &spec, double horizon, int steps);

/// -R^-1 B' P(t).
Mat classical_gain(const LQRSpec &spec, const ClassicalRiccati &riccati, double t);

/// Largest relative gap ||K - K_classical|| / max(||K_classical||, 1) over the
/// common time nodes (Frobenius norms).
double gain_discrepancy(const LQRSpec &spec, const RiccatiSolution &riccati,
                        const ClassicalRiccati &classical);

/// Least-squares u ~ K x over the given nodes of one slice.
struct LinearFit
{
  Mat K;
  /// ||u - K x|| / ||u|| over the nodes (0 when u vanishes there).
  double residual_ratio = 0.0;
};

LinearFit fit_linear_gain(const GridField &field, int time_index,
                          const std::vector<std::size_t> &nodes);

struct GainComparison
{
  /// max over slices with t <= fraction*T of ||K_fit - K|| / ||K|| (Frobenius).
  double max_rel_error = 0.0;
  double time_of_max = 0.0;
  /// Worst linear-fit residual ratio over the same slices.
  double max_fit_residual = 0.0;
};

GainComparison compare_with_riccati(const LQRSpec &spec, const RiccatiSolution &riccati,
                                    const GridField &field,
                                    const std::vector<std::size_t> &nodes,
                                    double horizon_fraction = 0.9);

/// Seeded well-conditioned spec with N = m: cond(B R^-1 B') <= max_condition,
/// Q and H positive semidefinite, R diagonal positive.
LQRSpec random_lqr_spec(int dim, unsigned seed, double max_condition = 10.0);

} // namespace feedsynth

#endif // FEEDSYNTH_LQR_HPP_
