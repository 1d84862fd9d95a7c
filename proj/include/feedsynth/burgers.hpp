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

#ifndef FEEDSYNTH_BURGERS_HPP_
#define FEEDSYNTH_BURGERS_HPP_

#include <optional>
#include <vector>

#include "feedsynth/flow.hpp"
#include "feedsynth/grid.hpp"
#include "feedsynth/problem.hpp"

namespace feedsynth
{

/**
 * @brief Classical solution of u_t + u u_x = 0 with terminal data u(T, x) = f(x).
 *
 * Characteristics are straight lines x = xi + (t - T) f(xi). They first cross
 * at T - 1/sup f' when sup f' > 0. Without an analytic bound, sup f' is taken
 * from `sample_count` equally spaced samples of f' on [sample_lo, sample_hi].
 */
class BurgersSolution
{
public:
  BurgersSolution(ScalarFunction terminal, double horizon, double sample_lo = -10.0,
                  double sample_hi = 10.0, int sample_count = 200001,
                  std::optional<double> sup_derivative = std::nullopt);

  const ScalarFunction &terminal_data() const { return f_; }
  double horizon() const { return T_; }
  double sup_derivative() const { return sup_fprime_; }
  std::optional<double> blowup_time() const { return blowup_; }
  /// Grid spacing used to estimate sup f' (0 when supplied analytically).
  double sampling_resolution() const { return resolution_; }

  /// Valid for blowup_time < t <= T. Throws InvalidArgument outside that range
  /// and ConvergenceError("characteristic inversion failed") otherwise.
  double eval(double t, double x, double newton_tol = 1e-13, int max_newton = 200) const;

  /// Foot xi(t, x) of the characteristic through (t, x).
  double foot(double t, double x, double newton_tol = 1e-13, int max_newton = 200) const;

  /// |u_t + u u_x| by central differences of step h_fd.
  double residual(double t, double x, double h_fd = 1e-4) const;

private:
  ScalarFunction f_;
  double T_;
  double sup_fprime_;
  double resolution_ = 0.0;
  std::optional<double> blowup_;
};

/// Samples u(t, x) on the grid. Slices at or before the blow-up time are NaN.
GridField burgers_field(const BurgersSolution &sol, const Grid &grid, const TimeGrid &time_grid);

/// Control U = u - f of the academic problem realised by the Burgers velocity
/// field; NaN where the velocity is undefined.
GridField academic_control_field(const BurgersSolution &sol, const Grid &grid,
                                 const TimeGrid &time_grid);

struct AcademicFeedbackReport
{
  /// One flag per start: true when the classical regime does not cover it.
  std::vector<bool> affected;
  int checked = 0;
  /// max |x''| along the closed-loop paths (second differences). The
  /// Euler-Lagrange equation of the academic problem reduces to x'' = 0.
  double max_el_residual = 0.0;
  /// max |x'(T) - f(x(T))|.
  double max_terminal_residual = 0.0;
};

AcademicFeedbackReport verify_academic_feedback(const ScalarFunction &f, double horizon,
                                                const Grid &grid, const TimeGrid &time_grid,
                                                const std::vector<Sample> &starts);

} // namespace feedsynth

#endif // FEEDSYNTH_BURGERS_HPP_
