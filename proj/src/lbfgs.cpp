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

#include "gml/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gml {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// Two-loop recursion: returns -H g.
std::vector<double> search_direction(const std::deque<CurvaturePair>& pairs,
                                     std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    alpha[k] = pairs[k].rho * dot(pairs[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * pairs[k].y[i];
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& x : q) x *= gamma;
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double beta = pairs[k].rho * dot(pairs[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * pairs[k].s[i];
  }
  for (double& x : q) x = -x;
  return q;
}

}  // namespace

void LbfgsOptions::validate() const {
  if (memory < 0) throw std::invalid_argument("lbfgs memory must be nonnegative");
  if (max_iters < 0) throw std::invalid_argument("lbfgs max_iters must be nonnegative");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("lbfgs grad_tol must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) throw std::invalid_argument("armijo constant must be in (0,1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink factor must be in (0,1)");
  if (max_trials < 1) throw std::invalid_argument("line search needs at least one trial");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial step must be positive");
}

std::string_view to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::converged:
      return "converged";
    case LbfgsStatus::max_iterations:
      return "max_iterations";
    case LbfgsStatus::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

LbfgsResult minimize(const ObjectiveFunction& f, std::vector<double> x0,
                     const LbfgsOptions& options, const IterationObserver& observer) {
  options.validate();
  const std::size_t n = x0.size();
  int evaluations = 0;

  auto evaluate = [&](std::span<const double> x, std::span<double> g) {
    const double value = f(x, g);
    ++evaluations;
    if (!std::isfinite(value) || !all_finite(g)) {
      throw std::runtime_error("objective returned a non-finite value or gradient at evaluation " +
                               std::to_string(evaluations));
    }
    return value;
  };

  LbfgsResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> g(n);
  double value = evaluate(x, g);

  auto record = [&](int iteration, double step) {
    IterationRecord rec{iteration, value, inf_norm(g), step, evaluations};
    result.history.push_back(rec);
    if (observer) observer(rec, x);
  };
  record(0, 0.0);

  std::deque<CurvaturePair> pairs;
  std::vector<double> x_trial(n);
  std::vector<double> g_trial(n);
  result.status = LbfgsStatus::max_iterations;

  for (int it = 1; it <= options.max_iters + 1; ++it) {
    if (inf_norm(g) <= options.grad_tol) {
      result.status = LbfgsStatus::converged;
      break;
    }
    if (it > options.max_iters) break;

    std::vector<double> d = search_direction(pairs, g);
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      pairs.clear();
      d = search_direction(pairs, g);
      slope = dot(g, d);
    }
    double step = options.initial_step;
    if (pairs.empty()) {
      // No curvature information yet: keep the first trial step within unit length.
      const double dn = std::sqrt(dot(d, d));
      if (dn > 1.0) step /= dn;
    }

    bool accepted = false;
    double value_trial = value;
    for (int trial = 0; trial < options.max_trials; ++trial) {
      for (std::size_t i = 0; i < n; ++i) x_trial[i] = x[i] + step * d[i];
      value_trial = evaluate(x_trial, g_trial);
      if (value_trial <= value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= options.shrink;
    }
    if (!accepted) {
      result.status = LbfgsStatus::line_search_failed;
      break;
    }

    CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_trial[i] - x[i];
      pair.y[i] = g_trial[i] - g[i];
    }
    const double sy = dot(pair.s, pair.y);
    const double sn = std::sqrt(dot(pair.s, pair.s));
    const double yn = std::sqrt(dot(pair.y, pair.y));
    if (options.memory > 0 && sy > 1e-12 * sn * yn) {
      pair.rho = 1.0 / sy;
      pairs.push_back(std::move(pair));
      while (pairs.size() > static_cast<std::size_t>(options.memory)) pairs.pop_front();
    }

    x.swap(x_trial);
    g.swap(g_trial);
    value = value_trial;
    record(it, step);
  }

  result.x = std::move(x);
  result.value = value;
  return result;
}

}  // namespace gml
