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

#include "gml/objective.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "gml/sinkhorn.hpp"

namespace gml {

namespace {

void require_same_length(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("histograms have different lengths");
  }
}

template <typename Task>
void run_tasks(std::size_t count, int threads, const Task& task) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

LossKind parse_loss_kind(std::string_view name) {
  if (name == "l1") return LossKind::l1;
  if (name == "l2") return LossKind::l2;
  if (name == "kl") return LossKind::kl;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "' (expected l1, l2 or kl)");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::l1:
      return "l1";
    case LossKind::l2:
      return "l2";
    case LossKind::kl:
      return "kl";
  }
  return "unknown";
}

double loss(LossKind kind, std::span<const double> p, std::span<const double> q) {
  require_same_length(p, q);
  double total = 0.0;
  switch (kind) {
    case LossKind::l1:
      for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
      break;
    case LossKind::l2:
      for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - q[i]) * (p[i] - q[i]);
      break;
    case LossKind::kl:
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(q[i] > 0.0)) {
          throw std::domain_error("KL loss requires a strictly positive second argument");
        }
        if (p[i] > 0.0) total += p[i] * std::log(p[i] / q[i]);
        total += q[i] - p[i];
      }
      break;
  }
  return total;
}

double data_fit(LossKind kind, std::span<const double> reconstruction,
                std::span<const double> observation) {
  if (kind == LossKind::kl) return loss(kind, observation, reconstruction);
  return loss(kind, reconstruction, observation);
}

std::vector<double> data_fit_grad(LossKind kind, std::span<const double> reconstruction,
                                  std::span<const double> observation) {
  require_same_length(reconstruction, observation);
  std::vector<double> g(reconstruction.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double diff = reconstruction[i] - observation[i];
    switch (kind) {
      case LossKind::l1:
        g[i] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        break;
      case LossKind::l2:
        g[i] = 2.0 * diff;
        break;
      case LossKind::kl:
        if (!(reconstruction[i] > 0.0)) {
          throw std::domain_error("KL loss requires a strictly positive reconstruction");
        }
        g[i] = 1.0 - observation[i] / reconstruction[i];
        break;
    }
  }
  return g;
}

double reg_fc(std::span<const double> w) {
  double total = 0.0;
  for (double x : w) total += (x - 1.0) * (x - 1.0);
  return total;
}

std::vector<double> reg_fc_grad(std::span<const double> w) {
  std::vector<double> g(w.size());
  for (std::size_t e = 0; e < w.size(); ++e) g[e] = 2.0 * (w[e] - 1.0);
  return g;
}

namespace {

// D_e = sum_{e' in N(e)} (w_e - w_e')
std::vector<double> neighbor_differences(const GridSpec& grid, std::span<const double> w,
                                         std::vector<std::vector<std::size_t>>* lists) {
  if (w.size() != grid.edge_count()) {
    throw std::invalid_argument("weight vector length does not match edge count");
  }
  std::vector<double> d(w.size(), 0.0);
  if (lists) lists->resize(w.size());
  for (std::size_t e = 0; e < w.size(); ++e) {
    auto nb = parallel_neighbors(grid, e);
    for (std::size_t f : nb) d[e] += w[e] - w[f];
    if (lists) (*lists)[e] = std::move(nb);
  }
  return d;
}

}  // namespace

double reg_fs(const GridSpec& grid, std::span<const double> w) {
  const auto d = neighbor_differences(grid, w, nullptr);
  double total = 0.0;
  for (double x : d) total += x * x;
  return total;
}

std::vector<double> reg_fs_grad(const GridSpec& grid, std::span<const double> w) {
  std::vector<std::vector<std::size_t>> lists;
  const auto d = neighbor_differences(grid, w, &lists);
  // dD_e/dw_k = |N(e)| [k = e] - [k in N(e)], and N is symmetric.
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k) {
    double acc = 2.0 * static_cast<double>(lists[k].size()) * d[k];
    for (std::size_t e : lists[k]) acc -= 2.0 * d[e];
    g[k] = acc;
  }
  return g;
}

std::vector<double> uniform_timestamps(std::size_t frames) {
  if (frames < 2) {
    throw std::invalid_argument("a sequence needs at least 2 frames");
  }
  std::vector<double> t(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(frames - 1);
  }
  return t;
}

Sequence Sequence::uniform(std::vector<std::vector<double>> frames) {
  Sequence s;
  s.times = uniform_timestamps(frames.size());
  s.frames = std::move(frames);
  return s;
}

void Sequence::validate(std::size_t length) const {
  if (frames.size() < 2) {
    throw std::invalid_argument("a sequence needs at least 2 frames");
  }
  if (times.size() != frames.size()) {
    throw std::invalid_argument("sequence needs one timestamp per frame");
  }
  if (times.front() != 0.0 || times.back() != 1.0) {
    throw std::invalid_argument("sequence timestamps must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw std::invalid_argument("sequence timestamps must be increasing");
    }
  }
  for (const auto& f : frames) {
    if (f.size() != length) {
      throw std::invalid_argument("frame length does not match grid");
    }
    double sum = 0.0;
    for (double x : f) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("frames must be nonnegative and finite");
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("frames must sum to 1");
    }
  }
}

FrameTerm frame_term(const DiffusionOperator& op, const ObjectiveSpec& spec,
                     std::size_t sequence, std::size_t frame, bool with_gradient) {
  const Sequence& seq = spec.sequences.at(sequence);
  const auto& observed = seq.frames.at(frame);
  BarycenterResult bary = interpolate(op, seq.frames.front(), seq.frames.back(),
                                      seq.times[frame], spec.iterations, with_gradient);
  FrameTerm term;
  term.loss = data_fit(spec.loss, bary.barycenter, observed);
  term.clamped = bary.clamped;
  if (with_gradient) {
    const auto gbar = data_fit_grad(spec.loss, bary.barycenter, observed);
    term.grad = barycenter_backward(op, *bary.tape, gbar);
  }
  return term;
}

Evaluation evaluate_objective(const ObjectiveSpec& spec, std::span<const double> log_weights,
                              bool with_gradient) {
  const std::size_t n = spec.grid.vertex_count();
  for (const auto& s : spec.sequences) s.validate(n);

  const EdgeWeights weights = EdgeWeights::from_log(spec.grid, log_weights);
  const auto w = weights.values();
  const DiffusionOperator op(weights, spec.epsilon, spec.substeps);

  struct Slot {
    std::size_t sequence;
    std::size_t frame;
  };
  std::vector<Slot> slots;
  for (std::size_t s = 0; s < spec.sequences.size(); ++s) {
    for (std::size_t i = 0; i < spec.sequences[s].size(); ++i) slots.push_back({s, i});
  }
  std::vector<FrameTerm> terms(slots.size());
  run_tasks(slots.size(), spec.threads, [&](std::size_t k) {
    terms[k] = frame_term(op, spec, slots[k].sequence, slots[k].frame, with_gradient);
  });

  Evaluation ev;
  ev.sequence_fit.assign(spec.sequences.size(), 0.0);
  std::vector<double> grad_w(w.size(), 0.0);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    ev.sequence_fit[slots[k].sequence] += terms[k].loss;
    ev.clamped += terms[k].clamped;
    if (with_gradient) {
      for (std::size_t e = 0; e < grad_w.size(); ++e) grad_w[e] += terms[k].grad[e];
    }
  }
  for (double fit : ev.sequence_fit) ev.data_fit += fit;

  ev.fc = reg_fc(w);
  ev.fs = reg_fs(spec.grid, w);
  ev.regularization = spec.lambda_c * ev.fc + spec.lambda_s * ev.fs;
  ev.value = ev.data_fit + ev.regularization;

  if (with_gradient) {
    const auto gc = reg_fc_grad(w);
    const auto gs = reg_fs_grad(spec.grid, w);
    ev.gradient.resize(w.size());
    for (std::size_t e = 0; e < w.size(); ++e) {
      const double dw = grad_w[e] + spec.lambda_c * gc[e] + spec.lambda_s * gs[e];
      ev.gradient[e] = dw * w[e];
    }
  }
  return ev;
}

std::vector<double> initial_log_weights(const GridSpec& grid, const InitOptions& init,
                                        std::uint64_t seed) {
  const std::size_t k = grid.edge_count();
  if (init.mode == InitOptions::Mode::constant) {
    if (!(init.value > 0.0)) throw std::invalid_argument("constant initial weight must be positive");
    return std::vector<double>(k, std::log(init.value));
  }
  if (!(init.low > 0.0) || !(init.high >= init.low)) {
    throw std::invalid_argument("log-uniform initialization needs 0 < low <= high");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(std::log(init.low), std::log(init.high));
  std::vector<double> out(k);
  for (double& x : out) x = dist(rng);
  return out;
}

FitResult fit_metric(const ObjectiveSpec& spec, std::vector<double> initial,
                     const LbfgsOptions& options,
                     const std::function<void(const FitRecord&)>& on_iteration) {
  const auto start = std::chrono::steady_clock::now();
  Evaluation last;
  auto f = [&](std::span<const double> x, std::span<double> g) {
    last = evaluate_objective(spec, x, true);
    std::copy(last.gradient.begin(), last.gradient.end(), g.begin());
    return last.value;
  };

  FitResult result;
  // The line search returns on its last evaluated point, so `last` always
  // describes the accepted iterate when the observer fires.
  auto observer = [&](const IterationRecord& rec, std::span<const double>) {
    FitRecord fr;
    fr.iteration = rec;
    fr.data_fit = last.data_fit;
    fr.fc = last.fc;
    fr.fs = last.fs;
    fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(fr);
    if (on_iteration) on_iteration(fr);
  };
  result.optimization = minimize(f, std::move(initial), options, observer);
  result.log_weights = result.optimization.x;
  return result;
}

}  // namespace gml
