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
#include <vector>

#include <Eigen/SparseCore>

#include "gml/tensor_store.hpp"

namespace gml {

/// d-dimensional Cartesian grid with nearest-neighbour connectivity.
///
/// Vertices are indexed row-major over dims (last axis fastest). Edges are
/// indexed axis-major: all axis-0 edges first, then axis-1, and so on. The
/// edges of one axis form a field shaped like dims with that axis reduced by
/// one, and are stored row-major over that field. For a 2-D grid, axis 0
/// edges join rows (vertical) and axis 1 edges join columns (horizontal).
class GridSpec {
 public:
  struct Edge {
    std::size_t axis;
    std::size_t tail;  // lower vertex
    std::size_t head;  // tail + stride(axis)
  };

  explicit GridSpec(std::vector<std::size_t> dims);
  static GridSpec cube(std::size_t d, std::size_t n);

  std::size_t dim() const { return dims_.size(); }
  std::size_t extent(std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t stride(std::size_t axis) const { return strides_.at(axis); }

  std::size_t vertex_index(std::span<const std::size_t> coords) const;
  std::vector<std::size_t> vertex_coords(std::size_t v) const;

  std::vector<std::size_t> field_dims(std::size_t axis) const;
  std::size_t axis_edge_count(std::size_t axis) const;
  std::size_t axis_offset(std::size_t axis) const { return offsets_.at(axis); }
  std::size_t edge_count() const { return offsets_.back(); }

  /// Axis of edge e and its coordinates inside that axis' field.
  std::size_t edge_axis(std::size_t e) const;
  std::vector<std::size_t> edge_field_coords(std::size_t e) const;
  std::size_t edge_from_field(std::size_t axis, std::span<const std::size_t> field_coords) const;

  Edge edge(std::size_t e) const;
  /// All edges in index order.
  std::vector<Edge> edges() const;

  /// Inverse squared grid spacing along an axis when the grid spans the unit
  /// interval, i.e. (n_a - 1)^2. Multiplies the edge weights in diffusion so
  /// that weights keep their meaning across resolutions.
  double axis_scale(std::size_t axis) const;

  bool operator==(const GridSpec& other) const { return dims_ == other.dims_; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::vector<std::size_t> offsets_;  // dim()+1 entries
  std::size_t vertex_count_ = 0;
};

std::size_t edge_count(const GridSpec& spec);

/// Strictly positive per-edge weights on a grid, in the grid's edge order.
class EdgeWeights {
 public:
  EdgeWeights(GridSpec grid, std::vector<double> values);

  static EdgeWeights constant(GridSpec grid, double value = 1.0);
  static EdgeWeights from_log(GridSpec grid, std::span<const double> log_values);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> axis_field(std::size_t axis) const;
  Tensor axis_tensor(std::size_t axis) const;
  std::vector<double> log_values() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// File name of one axis field inside a weights directory.
std::string weight_file_name(std::size_t axis);
void save_weights(const std::filesystem::path& dir, const EdgeWeights& w);
/// Reads weights_axis0.gmlt, weights_axis1.gmlt, ... and infers the grid.
EdgeWeights load_weights(const std::filesystem::path& dir);

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Weighted graph Laplacian W - diag(W 1). Off-diagonal w_e on each edge,
/// diagonal minus the weighted degree. Throws on nonpositive weights.
SparseMatrix build_laplacian(const GridSpec& spec, std::span<const double> w);

/// Same-axis edges at unit offset along exactly one grid axis (any axis,
/// including the edge's own). Returned in increasing edge order.
std::vector<std::size_t> parallel_neighbors(const GridSpec& spec, std::size_t e);

/// Resamples each axis field onto a finer grid by multilinear interpolation,
/// treating field entries as samples at edge midpoints in unit coordinates.
EdgeWeights upsample_weights(const EdgeWeights& w, const GridSpec& dst);

}  // namespace gml
