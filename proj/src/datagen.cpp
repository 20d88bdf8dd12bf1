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

#include "gml/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "gml/sinkhorn.hpp"

namespace gml {

namespace {

using nlohmann::json;

void normalize(std::vector<double>& h) {
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (!(sum > 0.0)) {
    throw std::invalid_argument("histogram has no mass");
  }
  for (double& x : h) x /= sum;
}

// Box blur of a row-major field along each axis, averaging in-bounds samples.
void box_blur(std::vector<double>& field, const std::vector<std::size_t>& dims, int radius) {
  if (radius <= 0) return;
  std::vector<double> tmp(field.size());
  std::size_t stride = field.size();
  for (std::size_t a = 0; a < dims.size(); ++a) {
    const std::size_t extent = dims[a];
    stride /= extent;
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
      const std::size_t pos = (idx / stride) % extent;
      const std::size_t lo = pos >= static_cast<std::size_t>(radius) ? pos - radius : 0;
      const std::size_t hi = std::min(extent - 1, pos + static_cast<std::size_t>(radius));
      double acc = 0.0;
      for (std::size_t p = lo; p <= hi; ++p) acc += field[idx + p * stride - pos * stride];
      tmp[idx] = acc / static_cast<double>(hi - lo + 1);
    }
    field.swap(tmp);
  }
}

std::vector<double> read_point(const json& j, const char* key, std::size_t dim) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::invalid_argument(std::string("pattern: '") + key + "' must be a coordinate array");
  }
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != dim) {
    throw std::invalid_argument(std::string("pattern: '") + key + "' has the wrong dimension");
  }
  return v;
}

std::vector<std::size_t> read_axes(const json& j, std::size_t dim) {
  if (!j.contains("axes")) return {};
  const json& a = j.at("axes");
  if (a.is_string()) {
    const auto s = a.get<std::string>();
    if (s == "all") return {};
    if (dim == 2 && s == "horizontal") return {1};
    if (dim == 2 && s == "vertical") return {0};
    throw std::invalid_argument("pattern: unknown axes '" + s + "'");
  }
  auto axes = a.get<std::vector<std::size_t>>();
  for (std::size_t x : axes) {
    if (x >= dim) throw std::invalid_argument("pattern: axis index out of range");
  }
  return axes;
}

HistogramRecipe read_histogram(const json& j, std::size_t dim) {
  HistogramRecipe h;
  if (j.contains("dirac")) {
    h.kind = HistogramRecipe::Kind::dirac;
    h.center = read_point(j.at("dirac"), "center", dim);
  } else if (j.contains("gaussian")) {
    h.kind = HistogramRecipe::Kind::gaussian;
    h.center = read_point(j.at("gaussian"), "center", dim);
    h.sigma = j.at("gaussian").value("sigma", 1.0);
  } else {
    throw std::invalid_argument("pattern: histogram must be a 'dirac' or 'gaussian'");
  }
  return h;
}

}  // namespace

std::vector<double> dirac(const GridSpec& grid, std::size_t vertex) {
  if (vertex >= grid.vertex_count()) {
    throw std::out_of_range("dirac vertex outside grid");
  }
  std::vector<double> h(grid.vertex_count(), 0.0);
  h[vertex] = 1.0;
  return h;
}

std::vector<double> dirac(const GridSpec& grid, std::span<const std::size_t> coords) {
  return dirac(grid, grid.vertex_index(coords));
}

std::vector<double> gaussian(const GridSpec& grid, std::span<const double> center, double sigma) {
  if (center.size() != grid.dim()) {
    throw std::invalid_argument("gaussian center has the wrong dimension");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian sigma must be positive");
  }
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    if (!(center[a] >= 0.0 && center[a] <= static_cast<double>(grid.extent(a) - 1))) {
      throw std::out_of_range("gaussian center outside grid");
    }
  }
  std::vector<double> h(grid.vertex_count());
  for (std::size_t v = 0; v < h.size(); ++v) {
    const auto c = grid.vertex_coords(v);
    double r2 = 0.0;
    for (std::size_t a = 0; a < c.size(); ++a) {
      const double dx = static_cast<double>(c[a]) - center[a];
      r2 += dx * dx;
    }
    h[v] = std::exp(-r2 / (2.0 * sigma * sigma));
  }
  normalize(h);
  return h;
}

bool MetricRegion::contains(std::span<const double> point) const {
  if (shape == Shape::box) {
    for (std::size_t a = 0; a < point.size(); ++a) {
      if (point[a] < lo.at(a) || point[a] > hi.at(a)) return false;
    }
    return true;
  }
  double r2 = 0.0;
  for (std::size_t a = 0; a < point.size(); ++a) {
    const double dx = point[a] - center.at(a);
    r2 += dx * dx;
  }
  return r2 <= radius * radius;
}

bool MetricRegion::applies_to(std::size_t axis) const {
  return axes.empty() || std::find(axes.begin(), axes.end(), axis) != axes.end();
}

EdgeWeights render_metric(const GridSpec& grid, const MetricPattern& pattern) {
  if (!(pattern.base > 0.0)) {
    throw std::invalid_argument("metric base must be positive");
  }
  for (const auto& r : pattern.regions) {
    if (!(r.factor > 0.0)) {
      throw std::invalid_argument("metric region factors must be positive");
    }
  }
  std::vector<double> values;
  values.reserve(grid.edge_count());
  std::vector<double> mid(grid.dim());
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const auto fd = grid.field_dims(a);
    std::vector<double> field(grid.axis_edge_count(a), pattern.base);
    for (std::size_t k = 0; k < field.size(); ++k) {
      const auto c = grid.edge_field_coords(grid.axis_offset(a) + k);
      for (std::size_t b = 0; b < c.size(); ++b) {
        mid[b] = static_cast<double>(c[b]) + (b == a ? 0.5 : 0.0);
      }
      for (const auto& r : pattern.regions) {
        if (r.applies_to(a) && r.contains(mid)) field[k] *= r.factor;
      }
    }
    box_blur(field, fd, pattern.smoothing_radius);
    values.insert(values.end(), field.begin(), field.end());
  }
  return EdgeWeights(grid, std::move(values));
}

Sequence forward_sequence(const EdgeWeights& weights, std::span<const double> r0,
                          std::span<const double> r1, std::size_t frames, double epsilon,
                          int substeps, int iterations) {
  const DiffusionOperator op(weights, epsilon, substeps);
  Sequence seq;
  seq.times = uniform_timestamps(frames);
  for (double t : seq.times) {
    auto b = interpolate(op, r0, r1, t, iterations).barycenter;
    normalize(b);
    seq.frames.push_back(std::move(b));
  }
  return seq;
}

Sequence moving_gaussian_sequence(const GridSpec& grid,
                                  const std::vector<std::vector<double>>& waypoints,
                                  double sigma, std::size_t frames) {
  if (waypoints.size() < 2) {
    throw std::invalid_argument("moving gaussian needs at least 2 waypoints");
  }
  for (const auto& w : waypoints) {
    if (w.size() != grid.dim()) {
      throw std::invalid_argument("waypoint has the wrong dimension");
    }
  }
  // Arc-length parameterization of the polyline.
  std::vector<double> cumulative(waypoints.size(), 0.0);
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
      const double dx = waypoints[k][a] - waypoints[k - 1][a];
      d2 += dx * dx;
    }
    cumulative[k] = cumulative[k - 1] + std::sqrt(d2);
  }
  const double total = cumulative.back();

  Sequence seq;
  seq.times = uniform_timestamps(frames);
  std::vector<double> center(grid.dim());
  for (double t : seq.times) {
    if (total == 0.0) {
      center = waypoints.front();
    } else {
      const double s = t * total;
      std::size_t k = 1;
      while (k + 1 < waypoints.size() && cumulative[k] < s) ++k;
      const double seg = cumulative[k] - cumulative[k - 1];
      const double alpha = seg > 0.0 ? std::clamp((s - cumulative[k - 1]) / seg, 0.0, 1.0) : 0.0;
      for (std::size_t a = 0; a < grid.dim(); ++a) {
        center[a] = (1.0 - alpha) * waypoints[k - 1][a] + alpha * waypoints[k][a];
      }
    }
    seq.frames.push_back(gaussian(grid, center, sigma));
  }
  return seq;
}

std::vector<double> HistogramRecipe::render(const GridSpec& grid) const {
  if (kind == Kind::gaussian) return gaussian(grid, center, sigma);
  std::vector<std::size_t> coords(center.size());
  for (std::size_t a = 0; a < center.size(); ++a) {
    const double c = std::round(center[a]);
    if (c < 0.0) throw std::out_of_range("dirac vertex outside grid");
    coords[a] = static_cast<std::size_t>(c);
  }
  return dirac(grid, coords);
}

PatternFile parse_pattern(const std::string& text, std::size_t dim) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("pattern is not valid JSON: ") + e.what());
  }
  PatternFile out;
  try {
    out.metric.base = j.value("base", 1.0);
    out.metric.smoothing_radius = j.value("smoothing_radius", 0);
    for (const auto& rj : j.value("regions", json::array())) {
      MetricRegion r;
      const auto shape = rj.value("shape", std::string("box"));
      if (shape == "box") {
        r.shape = MetricRegion::Shape::box;
        r.lo = read_point(rj, "lo", dim);
        r.hi = read_point(rj, "hi", dim);
      } else if (shape == "disk") {
        r.shape = MetricRegion::Shape::disk;
        r.center = read_point(rj, "center", dim);
        r.radius = rj.at("radius").get<double>();
      } else {
        throw std::invalid_argument("pattern: unknown region shape '" + shape + "'");
      }
      r.factor = rj.at("factor").get<double>();
      if (!(r.factor > 0.0)) throw std::invalid_argument("pattern: region factor must be positive");
      r.axes = read_axes(rj, dim);
      out.metric.regions.push_back(std::move(r));
    }
    for (const auto& sj : j.value("sequences", json::array())) {
      SequenceRecipe s;
      const auto type = sj.value("type", std::string("forward"));
      if (type == "forward") {
        s.kind = SequenceRecipe::Kind::forward;
        s.from = read_histogram(sj.at("from"), dim);
        s.to = read_histogram(sj.at("to"), dim);
      } else if (type == "moving_gaussian") {
        s.kind = SequenceRecipe::Kind::moving_gaussian;
        s.sigma = sj.value("sigma", 1.0);
        s.waypoints = sj.at("waypoints").get<std::vector<std::vector<double>>>();
        for (const auto& w : s.waypoints) {
          if (w.size() != dim) throw std::invalid_argument("pattern: waypoint dimension mismatch");
        }
      } else {
        throw std::invalid_argument("pattern: unknown sequence type '" + type + "'");
      }
      out.sequences.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("pattern: ") + e.what());
  }
  return out;
}

PatternFile read_pattern(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open pattern " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pattern(ss.str(), dim);
}

void write_sequence(const std::filesystem::path& dir, const GridSpec& grid, const Sequence& seq) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  json manifest;
  manifest["format"] = "gml-sequence";
  manifest["version"] = 1;
  manifest["dims"] = grid.dims();
  manifest["times"] = seq.times;
  json files = json::array();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03zu.gmlt", i);
    write_tensor(dir / name, Tensor(grid.dims(), seq.frames[i]));
    files.push_back(name);
  }
  manifest["frames"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot write manifest in " + dir.string());
  }
  out << manifest.dump(2) << "\n";
}

std::pair<GridSpec, Sequence> read_sequence(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open manifest in " + dir.string());
  }
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw TensorIoError(TensorIoError::Kind::shape, std::string("bad manifest: ") + e.what());
  }
  try {
    GridSpec grid(m.at("dims").get<std::vector<std::size_t>>());
    Sequence seq;
    seq.times = m.at("times").get<std::vector<double>>();
    for (const auto& f : m.at("frames")) {
      Tensor t = read_tensor(dir / f.get<std::string>());
      if (t.dims != grid.dims()) {
        throw TensorIoError(TensorIoError::Kind::shape, "frame shape does not match manifest");
      }
      seq.frames.push_back(std::move(t.data));
    }
    seq.validate(grid.vertex_count());
    return {std::move(grid), std::move(seq)};
  } catch (const json::exception& e) {
    throw TensorIoError(TensorIoError::Kind::shape, std::string("bad manifest: ") + e.what());
  }
}

}  // namespace gml
