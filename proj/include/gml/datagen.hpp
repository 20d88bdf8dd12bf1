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
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gml/grid_graph.hpp"
#include "gml/objective.hpp"

namespace gml {

std::vector<double> dirac(const GridSpec& grid, std::size_t vertex);
std::vector<double> dirac(const GridSpec& grid, std::span<const std::size_t> coords);

/// Isotropic Gaussian in grid (cell) coordinates, truncated to the grid and
/// renormalized to unit mass.
std::vector<double> gaussian(const GridSpec& grid, std::span<const double> center, double sigma);

/// Axis-aligned box or disk in cell coordinates. An edge belongs to the
/// region when its midpoint does. Empty `axes` means every axis.
struct MetricRegion {
  enum class Shape { box, disk };
  Shape shape = Shape::box;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> center;
  double radius = 0.0;
  double factor = 1.0;
  std::vector<std::size_t> axes;

  bool contains(std::span<const double> point) const;
  bool applies_to(std::size_t axis) const;
};

/// Hand-made ground truth metric: a base weight multiplied by region
/// factors, then box-blurred per axis field.
struct MetricPattern {
  double base = 1.0;
  std::vector<MetricRegion> regions;
  int smoothing_radius = 0;
};

EdgeWeights render_metric(const GridSpec& grid, const MetricPattern& pattern);

/// Frames gamma(r0, r1, t_i) at uniform timestamps under the given weights,
/// each renormalized to unit mass.
Sequence forward_sequence(const EdgeWeights& weights, std::span<const double> r0,
                          std::span<const double> r1, std::size_t frames, double epsilon,
                          int substeps, int iterations);

/// Gaussian moving at constant speed along a polyline of waypoints.
Sequence moving_gaussian_sequence(const GridSpec& grid,
                                  const std::vector<std::vector<double>>& waypoints,
                                  double sigma, std::size_t frames);

/// Endpoint histogram description used by pattern files.
struct HistogramRecipe {
  enum class Kind { dirac, gaussian };
  Kind kind = Kind::gaussian;
  std::vector<double> center;
  double sigma = 1.0;

  std::vector<double> render(const GridSpec& grid) const;
};

struct SequenceRecipe {
  enum class Kind { forward, moving_gaussian };
  Kind kind = Kind::forward;
  HistogramRecipe from;
  HistogramRecipe to;
  std::vector<std::vector<double>> waypoints;
  double sigma = 1.0;
};

/// Contents of a pattern file: the metric plus the sequences to generate.
///
///   { "base": 1, "smoothing_radius": 1,
///     "regions": [ { "shape": "box", "lo": [r, c], "hi": [r, c],
///                    "factor": 0.1, "axes": "all" | "horizontal" |
///                    "vertical" | [0, 1] },
///                  { "shape": "disk", "center": [r, c], "radius": 3,
///                    "factor": 5 } ],
///     "sequences": [ { "type": "forward",
///                      "from": { "gaussian": { "center": [r, c], "sigma": 1.5 } },
///                      "to":   { "dirac": { "center": [r, c] } } },
///                    { "type": "moving_gaussian", "sigma": 1.5,
///                      "waypoints": [[r, c], [r, c]] } ] }
struct PatternFile {
  MetricPattern metric;
  std::vector<SequenceRecipe> sequences;
};

/// Throws std::invalid_argument on malformed content.
PatternFile parse_pattern(const std::string& text, std::size_t dim);
PatternFile read_pattern(const std::filesystem::path& path, std::size_t dim);

/// A sequence directory holds manifest.json plus one GMLT tensor per frame.
void write_sequence(const std::filesystem::path& dir, const GridSpec& grid, const Sequence& seq);
std::pair<GridSpec, Sequence> read_sequence(const std::filesystem::path& dir);

}  // namespace gml
