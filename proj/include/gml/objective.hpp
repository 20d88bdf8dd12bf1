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
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "gml/grid_graph.hpp"
#include "gml/heat_kernel.hpp"
#include "gml/lbfgs.hpp"

namespace gml {

enum class LossKind { l1, l2, kl };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

/// L1(p,q) = |p-q|_1, L2(p,q) = |p-q|_2^2, KL(p,q) = sum p log(p/q) - p + q,
/// evaluated exactly as written with 0 log 0 = 0.
double loss(LossKind kind, std::span<const double> p, std::span<const double> q);

/// Loss between a reconstruction and an observation. L1/L2 compare
/// (reconstruction, observation); KL compares (observation, reconstruction)
/// so that zeros in the observation stay finite.
double data_fit(LossKind kind, std::span<const double> reconstruction,
                std::span<const double> observation);
/// Gradient of data_fit with respect to the reconstruction. The L1
/// subgradient at a tie is 0.
std::vector<double> data_fit_grad(LossKind kind, std::span<const double> reconstruction,
                                  std::span<const double> observation);

/// |w - 1|^2
double reg_fc(std::span<const double> w);
std::vector<double> reg_fc_grad(std::span<const double> w);

/// sum_e (sum_{e' in N(e)} (w_e - w_e'))^2 over parallel_neighbors.
double reg_fs(const GridSpec& grid, std::span<const double> w);
std::vector<double> reg_fs_grad(const GridSpec& grid, std::span<const double> w);

std::vector<double> uniform_timestamps(std::size_t frames);

/// Observed frames h_1..h_P with increasing timestamps from 0 to 1.
struct Sequence {
  std::vector<std::vector<double>> frames;
  std::vector<double> times;

  static Sequence uniform(std::vector<std::vector<double>> frames);
  std::size_t size() const { return frames.size(); }
  void validate(std::size_t length) const;
};

struct ObjectiveSpec {
  GridSpec grid;
  std::vector<Sequence> sequences;
  LossKind loss = LossKind::l2;
  double lambda_c = 0.0;
  double lambda_s = 1.0;
  double epsilon = 1.2e-2;
  int substeps = 20;
  int iterations = 50;
  int threads = 1;
};

/// Reconstruction term of one frame: its loss and the gradient of that loss
/// with respect to the (linear) edge weights.
struct FrameTerm {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t clamped = 0;
};

FrameTerm frame_term(const DiffusionOperator& op, const ObjectiveSpec& spec,
                     std::size_t sequence, std::size_t frame, bool with_gradient = true);

struct Evaluation {
  double value = 0.0;
  double data_fit = 0.0;
  double fc = 0.0;
  double fs = 0.0;
  double regularization = 0.0;          // lambda_c fc + lambda_s fs
  std::vector<double> sequence_fit;     // per-sequence data terms
  std::vector<double> gradient;         // with respect to log weights
  std::size_t clamped = 0;
};

/// E(w) = sum over sequences and frames of data_fit(gamma(h_1, h_P, t_i), h_i)
///        + lambda_c fc(w) + lambda_s fs(w),  w = exp(log_weights).
///
/// Frames are evaluated on spec.threads threads; the data term is summed per
/// sequence and then across sequences, and frame gradients are summed in
/// (sequence, frame) order, so results do not depend on the thread count.
Evaluation evaluate_objective(const ObjectiveSpec& spec, std::span<const double> log_weights,
                              bool with_gradient = true);
inline Evaluation evaluate_with_grad(const ObjectiveSpec& spec,
                                     std::span<const double> log_weights) {
  return evaluate_objective(spec, log_weights, true);
}

struct InitOptions {
  enum class Mode { constant, log_uniform };
  Mode mode = Mode::constant;
  double value = 1.0;  // constant mode
  double low = 0.3;    // log_uniform bounds
  double high = 3.0;
};

std::vector<double> initial_log_weights(const GridSpec& grid, const InitOptions& init,
                                        std::uint64_t seed);

struct FitRecord {
  IterationRecord iteration;
  double data_fit = 0.0;
  double fc = 0.0;
  double fs = 0.0;
  double seconds = 0.0;
};

struct FitResult {
  std::vector<double> log_weights;
  LbfgsResult optimization;
  std::vector<FitRecord> history;
};

/// Minimizes the objective over log weights with L-BFGS.
FitResult fit_metric(const ObjectiveSpec& spec, std::vector<double> initial_log_weights,
                     const LbfgsOptions& options,
                     const std::function<void(const FitRecord&)>& on_iteration = {});

}  // namespace gml
