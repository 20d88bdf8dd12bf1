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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "gml/lbfgs.hpp"
#include "gml/objective.hpp"

namespace gml {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run parameters shared by the CLI subcommands.
///
/// Required keys: d, n, epsilon, substeps, sinkhorn_iters. Everything else
/// is optional:
///
///   frames          10
///   loss            "l2"            (l1 | l2 | kl)
///   lambda_c        0
///   lambda_s        1
///   lbfgs           { max_iters: 500, memory: 10, grad_tol: 1e-7,
///                     line_search: { armijo: 1e-4, shrink: 0.5,
///                                    max_trials: 40, initial_step: 1 } }
///   init            { mode: "constant", value: 1, low: 0.3, high: 3 }
///   seed            0
struct RunConfig {
  int d = 2;
  int n = 50;
  double epsilon = 1.2e-2;
  int substeps = 100;
  int sinkhorn_iters = 50;
  int frames = 10;
  LossKind loss = LossKind::l2;
  double lambda_c = 0.0;
  double lambda_s = 1.0;
  LbfgsOptions lbfgs;
  InitOptions init;
  std::uint64_t seed = 0;

  GridSpec grid() const;
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

RunConfig parse_config(const std::string& text);
/// I/O failures surface as TensorIoError (kind io), content errors as ConfigError.
RunConfig read_config(const std::filesystem::path& path);

}  // namespace gml
