/* Copyright 2026 The gml Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace gml {

struct LbfgsOptions {
  int memory = 10;          // 0 disables curvature pairs (plain gradient descent)
  int max_iters = 500;
  double grad_tol = 1e-7;   // stop when |g|_inf <= grad_tol
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_trials = 40;
  double initial_step = 1.0;

  void validate() const;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

std::string_view to_string(LbfgsStatus status);

struct IterationRecord {
  int iteration = 0;        // 0 is the starting point
  double value = 0.0;
  double grad_norm = 0.0;   // infinity norm
  double step = 0.0;        // accepted step length along the search direction
  int evaluations = 0;      // cumulative objective evaluations
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<IterationRecord> history;
};

/// Writes the gradient into its second argument and returns the value.
using ObjectiveFunction = std::function<double(std::span<const double>, std::span<double>)>;
using IterationObserver = std::function<void(const IterationRecord&, std::span<const double>)>;

/// Limited-memory BFGS with a backtracking Armijo line search. Curvature
/// pairs with s'y <= 1e-12 |s| |y| are dropped. Throws std::runtime_error if
/// the objective returns a non-finite value or gradient.
LbfgsResult minimize(const ObjectiveFunction& f, std::vector<double> x0,
                     const LbfgsOptions& options, const IterationObserver& observer = {});

}  // namespace gml
