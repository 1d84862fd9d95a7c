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

#ifndef FEEDSYNTH_ERRORS_HPP_
#define FEEDSYNTH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace feedsynth
{

/// A state or costate became non-finite; `time()` is where it was detected.
class BlowUpError : public std::runtime_error
{
public:
  BlowUpError(const std::string &what, double time)
      : std::runtime_error(what), time_(time) {}

  double time() const { return time_; }

private:
  double time_;
};

/// An iterative solver ran out of iterations. Carries the last residual.
class ConvergenceError : public std::runtime_error
{
public:
  ConvergenceError(const std::string &what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

private:
  double residual_;
  int iterations_;
};

/// Invalid construction data (grids, LQR specs, constraint sets, configs).
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace feedsynth

#endif // FEEDSYNTH_ERRORS_HPP_
