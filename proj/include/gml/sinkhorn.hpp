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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gml/heat_kernel.hpp"

namespace gml {

/// Denominators are clamped below at this value before dividing. Each clamp
/// is counted and reported as a degeneracy diagnostic.
inline constexpr double kDivisionFloor = 1e-300;

struct BarycenterProblem {
  std::vector<std::span<const double>> inputs;  // histograms a_r, each in the simplex
  std::vector<double> weights;                  // lambda, in the simplex
  int iterations = 50;                          // fixed, no early stopping
};

/// Forward intermediates of one barycenter evaluation, replayed in reverse by
/// barycenter_backward. Entries for iteration l and input r live at l*R + r.
///
/// Memory is about L * 2R * (S + 2) * N doubles.
struct BarycenterTape {
  std::size_t inputs = 0;
  std::size_t iterations = 0;
  std::size_t length = 0;
  std::vector<double> weights;
  std::vector<std::vector<double>> kv;   // K v_r
  std::vector<std::vector<double>> u;    // a_r / K v_r
  std::vector<std::vector<double>> ktu;  // K^T u_r
  std::vector<KernelTape> kv_tape;
  std::vector<KernelTape> ktu_tape;
  std::vector<std::vector<double>> b;    // barycenter after each iteration
};

struct BarycenterResult {
  std::vector<double> barycenter;
  std::size_t clamped = 0;
  std::optional<BarycenterTape> tape;
};

/// Iterative Bregman projection barycenter with the heat kernel. The
/// geometric mean is evaluated in log space.
BarycenterResult barycenter(const DiffusionOperator& op, const BarycenterProblem& problem,
                            bool record = false);

/// Regularized displacement interpolation between r0 and r1 at time t, i.e.
/// the barycenter with weights (1 - t, t).
BarycenterResult interpolate(const DiffusionOperator& op, std::span<const double> r0,
                             std::span<const double> r1, double t, int iterations,
                             bool record = false);

/// Gradient of a scalar loss with respect to the edge weights, given the
/// loss gradient gbar with respect to the barycenter.
std::vector<double> barycenter_backward(const DiffusionOperator& op, const BarycenterTape& tape,
                                        std::span<const double> gbar);
void accumulate_barycenter_backward(const DiffusionOperator& op, const BarycenterTape& tape,
                                    std::span<const double> gbar, std::span<double> grad);

struct Scalings {
  std::vector<double> u;
  std::vector<double> v;
  std::size_t clamped = 0;
};

/// State exposed after each half-update of the scaling iterations.
struct ScalingStep {
  int iteration;
  bool after_u;                     // false: right after the v-update
  std::span<const double> u;
  std::span<const double> v;
  std::span<const double> product;  // K v (after_u) or K^T u (after v)
};

/// Sinkhorn scalings for the plan diag(u) K diag(v) between a and b.
/// Starts from v = 1 and performs exactly `iterations` (u, v) updates.
Scalings sinkhorn_scalings(const Kernel& kernel, std::span<const double> a,
                           std::span<const double> b, int iterations,
                           const std::function<void(const ScalingStep&)>& observer = {});

/// Entropy H(P) = -sum P (log P - 1), with 0 (log 0 - 1) = 0.
double plan_entropy(std::span<const double> plan);

/// <C, P> - eps H(P) for the Sinkhorn plan between a and b, with the cost
/// C = -eps log K of the operator. Dense, small grids only.
double regularized_ot_value(const DiffusionOperator& op, std::span<const double> a,
                            std::span<const double> b, int iterations);

}  // namespace gml
