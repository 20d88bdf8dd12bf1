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

#include "gml/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gml {

namespace {

constexpr double kSimplexTolerance = 1e-12;

void require_simplex(std::span<const double> x, const char* what) {
  double sum = 0.0;
  for (double v : x) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " must be nonnegative and finite");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument(std::string(what) + " must sum to 1");
  }
}

double floor_div(double num, double den, std::size_t& clamped) {
  if (den < kDivisionFloor) {
    ++clamped;
    den = kDivisionFloor;
  }
  return num / den;
}

}  // namespace

BarycenterResult barycenter(const DiffusionOperator& op, const BarycenterProblem& problem,
                            bool record) {
  const std::size_t n = op.size();
  const std::size_t r_count = problem.inputs.size();
  if (r_count == 0 || problem.weights.size() != r_count) {
    throw std::invalid_argument("barycenter needs one weight per input histogram");
  }
  if (problem.iterations < 1) {
    throw std::invalid_argument("barycenter needs at least one iteration");
  }
  for (const auto& a : problem.inputs) {
    if (a.size() != n) {
      throw std::invalid_argument("histogram length does not match grid");
    }
    require_simplex(a, "input histogram");
  }
  require_simplex(problem.weights, "barycenter weights");

  const auto iterations = static_cast<std::size_t>(problem.iterations);
  BarycenterResult result;
  BarycenterTape* tape = nullptr;
  if (record) {
    tape = &result.tape.emplace();
    tape->inputs = r_count;
    tape->iterations = iterations;
    tape->length = n;
    tape->weights = problem.weights;
    const std::size_t slots = iterations * r_count;
    tape->kv.resize(slots);
    tape->u.resize(slots);
    tape->ktu.resize(slots);
    tape->kv_tape.resize(slots);
    tape->ktu_tape.resize(slots);
    tape->b.resize(iterations);
  }

  std::vector<std::vector<double>> v(r_count, std::vector<double>(n, 1.0));
  std::vector<std::vector<double>> ktu(r_count);
  std::vector<double> u(n);
  std::vector<double> log_b(n);
  std::vector<double> b(n);
  std::size_t clamped = 0;

  for (std::size_t l = 0; l < iterations; ++l) {
    for (std::size_t r = 0; r < r_count; ++r) {
      const std::size_t slot = l * r_count + r;
      std::vector<double> kv = op.apply(v[r], tape ? &tape->kv_tape[slot] : nullptr);
      const auto a = problem.inputs[r];
      for (std::size_t i = 0; i < n; ++i) u[i] = floor_div(a[i], kv[i], clamped);
      ktu[r] = op.apply(u, tape ? &tape->ktu_tape[slot] : nullptr);
      if (tape) {
        tape->kv[slot] = std::move(kv);
        tape->u[slot] = u;
        tape->ktu[slot] = ktu[r];
      }
    }
    std::fill(log_b.begin(), log_b.end(), 0.0);
    for (std::size_t r = 0; r < r_count; ++r) {
      const double lambda = problem.weights[r];
      if (lambda == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        double x = ktu[r][i];
        if (x < kDivisionFloor) {
          ++clamped;
          x = kDivisionFloor;
        }
        log_b[i] += lambda * std::log(x);
      }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] = std::exp(log_b[i]);
    for (std::size_t r = 0; r < r_count; ++r) {
      for (std::size_t i = 0; i < n; ++i) v[r][i] = floor_div(b[i], ktu[r][i], clamped);
    }
    if (tape) tape->b[l] = b;
  }
  result.barycenter = std::move(b);
  result.clamped = clamped;
  return result;
}

BarycenterResult interpolate(const DiffusionOperator& op, std::span<const double> r0,
                             std::span<const double> r1, double t, int iterations, bool record) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("interpolation time must lie in [0, 1]");
  }
  BarycenterProblem p;
  p.inputs = {r0, r1};
  p.weights = {1.0 - t, t};
  p.iterations = iterations;
  return barycenter(op, p, record);
}

std::vector<double> barycenter_backward(const DiffusionOperator& op, const BarycenterTape& tape,
                                        std::span<const double> gbar) {
  std::vector<double> grad(op.edge_count(), 0.0);
  accumulate_barycenter_backward(op, tape, gbar, grad);
  return grad;
}

void accumulate_barycenter_backward(const DiffusionOperator& op, const BarycenterTape& tape,
                                    std::span<const double> gbar, std::span<double> grad) {
  const std::size_t n = tape.length;
  const std::size_t r_count = tape.inputs;
  const std::size_t slots = tape.iterations * r_count;
  if (n != op.size() || gbar.size() != n || grad.size() != op.edge_count() ||
      tape.kv.size() != slots || tape.u.size() != slots || tape.ktu.size() != slots ||
      tape.kv_tape.size() != slots || tape.ktu_tape.size() != slots ||
      tape.b.size() != tape.iterations || tape.weights.size() != r_count) {
    throw std::invalid_argument("barycenter tape does not match operator or gradient");
  }

  std::vector<double> bar_b(gbar.begin(), gbar.end());
  std::vector<std::vector<double>> bar_v(r_count, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> bar_den(r_count, std::vector<double>(n, 0.0));
  std::vector<double> bar_kv(n);

  for (std::size_t l = tape.iterations; l-- > 0;) {
    const auto& b = tape.b[l];
    // v_r = b / K^T u_r
    for (std::size_t r = 0; r < r_count; ++r) {
      const auto& ktu = tape.ktu[l * r_count + r];
      for (std::size_t i = 0; i < n; ++i) {
        const double den = std::max(ktu[i], kDivisionFloor);
        bar_b[i] += bar_v[r][i] / den;
        bar_den[r][i] = -bar_v[r][i] * b[i] / (den * den);
      }
    }
    // b = exp(sum_r lambda_r log K^T u_r)
    for (std::size_t r = 0; r < r_count; ++r) {
      const double lambda = tape.weights[r];
      if (lambda == 0.0) continue;
      const auto& ktu = tape.ktu[l * r_count + r];
      for (std::size_t i = 0; i < n; ++i) {
        const double den = std::max(ktu[i], kDivisionFloor);
        bar_den[r][i] += bar_b[i] * b[i] * lambda / den;
      }
    }
    for (std::size_t r = 0; r < r_count; ++r) {
      const std::size_t slot = l * r_count + r;
      const auto& ktu = tape.ktu[slot];
      for (std::size_t i = 0; i < n; ++i) {
        if (ktu[i] < kDivisionFloor) bar_den[r][i] = 0.0;
      }
      // K^T u_r
      op.accumulate_adjoint_weights(tape.ktu_tape[slot], bar_den[r], grad);
      const std::vector<double> bar_u = op.adjoint_input(bar_den[r]);
      // u_r = a_r / K v_r
      const auto& kv = tape.kv[slot];
      const auto& u = tape.u[slot];
      for (std::size_t i = 0; i < n; ++i) {
        bar_kv[i] = kv[i] < kDivisionFloor ? 0.0 : -bar_u[i] * u[i] / kv[i];
      }
      // K v_r; v_r before the first iteration is the constant 1.
      op.accumulate_adjoint_weights(tape.kv_tape[slot], bar_kv, grad);
      if (l > 0) {
        bar_v[r] = op.adjoint_input(bar_kv);
      }
    }
    std::fill(bar_b.begin(), bar_b.end(), 0.0);
  }
}

Scalings sinkhorn_scalings(const Kernel& kernel, std::span<const double> a,
                           std::span<const double> b, int iterations,
                           const std::function<void(const ScalingStep&)>& observer) {
  const std::size_t n = kernel.size();
  if (a.size() != n || b.size() != n) {
    throw std::invalid_argument("histogram length does not match kernel");
  }
  if (iterations < 1) {
    throw std::invalid_argument("scalings need at least one iteration");
  }
  require_simplex(a, "source histogram");
  require_simplex(b, "target histogram");

  Scalings s;
  s.u.assign(n, 0.0);
  s.v.assign(n, 1.0);
  std::vector<double> product(n);
  for (int it = 0; it < iterations; ++it) {
    kernel.apply(s.v, product);
    for (std::size_t i = 0; i < n; ++i) s.u[i] = floor_div(a[i], product[i], s.clamped);
    if (observer) observer({it, true, s.u, s.v, product});
    kernel.apply(s.u, product);
    for (std::size_t i = 0; i < n; ++i) s.v[i] = floor_div(b[i], product[i], s.clamped);
    if (observer) observer({it, false, s.u, s.v, product});
  }
  return s;
}

double plan_entropy(std::span<const double> plan) {
  double h = 0.0;
  for (double p : plan) {
    if (p > 0.0) h -= p * (std::log(p) - 1.0);
  }
  return h;
}

double regularized_ot_value(const DiffusionOperator& op, std::span<const double> a,
                            std::span<const double> b, int iterations) {
  const Tensor k = op.dense_kernel();
  const std::size_t n = op.size();
  Eigen::MatrixXd kmat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      kmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k.data[i * n + j];
    }
  }
  const DenseKernel dense(kmat);
  const Scalings s = sinkhorn_scalings(dense, a, b, iterations);

  std::vector<double> plan(n * n);
  double transport = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double kij = k.data[i * n + j];
      const double p = s.u[i] * kij * s.v[j];
      plan[i * n + j] = p;
      if (p > 0.0) transport += -op.epsilon() * std::log(kij) * p;
    }
  }
  return transport - op.epsilon() * plan_entropy(plan);
}

}  // namespace gml
