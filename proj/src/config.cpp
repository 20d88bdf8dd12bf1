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

#include "gml/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "gml/tensor_store.hpp"

namespace gml {

namespace {

using nlohmann::json;

template <typename T>
T get_required(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(std::string("missing required key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

template <typename T>
void get_optional(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

int get_int(const json& j, const char* key, bool required, int fallback) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(std::string("missing required key '") + key + "'");
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("key '") + key + "' must be an integer");
  }
  return v.get<int>();
}

}  // namespace

GridSpec RunConfig::grid() const {
  return GridSpec::cube(static_cast<std::size_t>(d), static_cast<std::size_t>(n));
}

void RunConfig::validate() const {
  if (d != 2 && d != 3) throw ConfigError("d must be 2 or 3");
  if (n < 2) throw ConfigError("n must be at least 2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (substeps < 1) throw ConfigError("substeps must be at least 1");
  if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be at least 1");
  if (frames < 2) throw ConfigError("frames must be at least 2");
  if (!(lambda_c >= 0.0)) throw ConfigError("lambda_c must be nonnegative");
  if (!(lambda_s >= 0.0)) throw ConfigError("lambda_s must be nonnegative");
  try {
    lbfgs.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (init.mode == InitOptions::Mode::log_uniform) {
    if (!(init.low > 0.0)) throw ConfigError("init.low must be positive for log_uniform");
    if (!(init.high >= init.low)) throw ConfigError("init.high must be at least init.low");
  } else if (!(init.value > 0.0)) {
    throw ConfigError("init.value must be positive");
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig c;
  c.d = get_int(j, "d", true, 0);
  c.n = get_int(j, "n", true, 0);
  c.epsilon = get_required<double>(j, "epsilon");
  c.substeps = get_int(j, "substeps", true, 0);
  c.sinkhorn_iters = get_int(j, "sinkhorn_iters", true, 0);
  c.frames = get_int(j, "frames", false, c.frames);
  if (j.contains("loss")) {
    try {
      c.loss = parse_loss_kind(get_required<std::string>(j, "loss"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  get_optional(j, "lambda_c", c.lambda_c);
  get_optional(j, "lambda_s", c.lambda_s);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be an unsigned integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }

  if (j.contains("lbfgs")) {
    const json& lb = j.at("lbfgs");
    if (!lb.is_object()) throw ConfigError("lbfgs must be an object");
    c.lbfgs.max_iters = get_int(lb, "max_iters", false, c.lbfgs.max_iters);
    c.lbfgs.memory = get_int(lb, "memory", false, c.lbfgs.memory);
    get_optional(lb, "grad_tol", c.lbfgs.grad_tol);
    if (lb.contains("line_search")) {
      const json& ls = lb.at("line_search");
      if (!ls.is_object()) throw ConfigError("lbfgs.line_search must be an object");
      get_optional(ls, "armijo", c.lbfgs.armijo);
      get_optional(ls, "shrink", c.lbfgs.shrink);
      c.lbfgs.max_trials = get_int(ls, "max_trials", false, c.lbfgs.max_trials);
      get_optional(ls, "initial_step", c.lbfgs.initial_step);
    }
  }

  if (j.contains("init")) {
    const json& in = j.at("init");
    if (!in.is_object()) throw ConfigError("init must be an object");
    std::string mode = "constant";
    get_optional(in, "mode", mode);
    if (mode == "constant") {
      c.init.mode = InitOptions::Mode::constant;
    } else if (mode == "log_uniform") {
      c.init.mode = InitOptions::Mode::log_uniform;
    } else {
      throw ConfigError("init.mode must be 'constant' or 'log_uniform'");
    }
    get_optional(in, "value", c.init.value);
    get_optional(in, "low", c.init.low);
    get_optional(in, "high", c.init.high);
  }

  c.validate();
  return c;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open config " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace gml
