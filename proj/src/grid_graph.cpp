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

#include "gml/grid_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gml {

GridSpec::GridSpec(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw std::invalid_argument("grid needs at least one axis");
  }
  for (std::size_t n : dims_) {
    if (n < 2) {
      throw std::invalid_argument("every grid axis needs at least 2 vertices");
    }
  }
  strides_.assign(dims_.size(), 1);
  for (std::size_t a = dims_.size() - 1; a > 0; --a) {
    strides_[a - 1] = strides_[a] * dims_[a];
  }
  vertex_count_ = strides_[0] * dims_[0];
  offsets_.assign(dims_.size() + 1, 0);
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    offsets_[a + 1] = offsets_[a] + axis_edge_count(a);
  }
}

GridSpec GridSpec::cube(std::size_t d, std::size_t n) {
  return GridSpec(std::vector<std::size_t>(d, n));
}

std::size_t GridSpec::vertex_index(std::span<const std::size_t> coords) const {
  if (coords.size() != dims_.size()) {
    throw std::invalid_argument("coordinate rank does not match grid");
  }
  std::size_t v = 0;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    if (coords[a] >= dims_[a]) {
      throw std::out_of_range("vertex coordinate outside grid");
    }
    v += coords[a] * strides_[a];
  }
  return v;
}

std::vector<std::size_t> GridSpec::vertex_coords(std::size_t v) const {
  if (v >= vertex_count_) {
    throw std::out_of_range("vertex index outside grid");
  }
  std::vector<std::size_t> c(dims_.size());
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    c[a] = v / strides_[a];
    v %= strides_[a];
  }
  return c;
}

std::vector<std::size_t> GridSpec::field_dims(std::size_t axis) const {
  std::vector<std::size_t> fd = dims_;
  fd.at(axis) -= 1;
  return fd;
}

std::size_t GridSpec::axis_edge_count(std::size_t axis) const {
  return vertex_count_ / dims_.at(axis) * (dims_[axis] - 1);
}

std::size_t GridSpec::edge_axis(std::size_t e) const {
  if (e >= edge_count()) {
    throw std::out_of_range("edge index outside grid");
  }
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), e);
  return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::vector<std::size_t> GridSpec::edge_field_coords(std::size_t e) const {
  const std::size_t a = edge_axis(e);
  std::size_t k = e - offsets_[a];
  const auto fd = field_dims(a);
  std::vector<std::size_t> c(fd.size());
  for (std::size_t b = fd.size(); b-- > 0;) {
    c[b] = k % fd[b];
    k /= fd[b];
  }
  return c;
}

std::size_t GridSpec::edge_from_field(std::size_t axis,
                                      std::span<const std::size_t> field_coords) const {
  const auto fd = field_dims(axis);
  std::size_t k = 0;
  for (std::size_t b = 0; b < fd.size(); ++b) {
    if (field_coords[b] >= fd[b]) {
      throw std::out_of_range("edge field coordinate outside grid");
    }
    k = k * fd[b] + field_coords[b];
  }
  return offsets_[axis] + k;
}

GridSpec::Edge GridSpec::edge(std::size_t e) const {
  const std::size_t a = edge_axis(e);
  const auto c = edge_field_coords(e);
  const std::size_t tail = vertex_index(c);
  return {a, tail, tail + strides_[a]};
}

std::vector<GridSpec::Edge> GridSpec::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  std::vector<std::size_t> c(dims_.size());
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    const auto fd = field_dims(a);
    std::fill(c.begin(), c.end(), 0);
    const std::size_t count = axis_edge_count(a);
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t tail = 0;
      for (std::size_t b = 0; b < c.size(); ++b) tail += c[b] * strides_[b];
      out.push_back({a, tail, tail + strides_[a]});
      for (std::size_t b = c.size(); b-- > 0;) {
        if (++c[b] < fd[b]) break;
        c[b] = 0;
      }
    }
  }
  return out;
}

double GridSpec::axis_scale(std::size_t axis) const {
  const double h = static_cast<double>(dims_.at(axis) - 1);
  return h * h;
}

std::size_t edge_count(const GridSpec& spec) { return spec.edge_count(); }

EdgeWeights::EdgeWeights(GridSpec grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.edge_count()) {
    throw std::invalid_argument("weight vector length " + std::to_string(values_.size()) +
                                " does not match edge count " +
                                std::to_string(grid_.edge_count()));
  }
  for (double x : values_) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("edge weights must be finite and strictly positive");
    }
  }
}

EdgeWeights EdgeWeights::constant(GridSpec grid, double value) {
  const std::size_t k = grid.edge_count();
  return EdgeWeights(std::move(grid), std::vector<double>(k, value));
}

EdgeWeights EdgeWeights::from_log(GridSpec grid, std::span<const double> log_values) {
  std::vector<double> w(log_values.size());
  std::transform(log_values.begin(), log_values.end(), w.begin(),
                 [](double x) { return std::exp(x); });
  return EdgeWeights(std::move(grid), std::move(w));
}

std::span<const double> EdgeWeights::axis_field(std::size_t axis) const {
  return std::span<const double>(values_).subspan(grid_.axis_offset(axis),
                                                  grid_.axis_edge_count(axis));
}

Tensor EdgeWeights::axis_tensor(std::size_t axis) const {
  const auto f = axis_field(axis);
  return Tensor(grid_.field_dims(axis), std::vector<double>(f.begin(), f.end()));
}

std::vector<double> EdgeWeights::log_values() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [](double x) { return std::log(x); });
  return out;
}

std::string weight_file_name(std::size_t axis) {
  return "weights_axis" + std::to_string(axis) + ".gmlt";
}

void save_weights(const std::filesystem::path& dir, const EdgeWeights& w) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  for (std::size_t a = 0; a < w.grid().dim(); ++a) {
    write_tensor(dir / weight_file_name(a), w.axis_tensor(a));
  }
}

EdgeWeights load_weights(const std::filesystem::path& dir) {
  const auto first = dir / weight_file_name(0);
  if (!std::filesystem::exists(first)) {
    throw TensorIoError(TensorIoError::Kind::io, "missing weight field " + first.string());
  }
  std::vector<Tensor> fields;
  fields.push_back(read_tensor(first));
  const std::size_t d = fields[0].ndim();
  for (std::size_t a = 1; a < d; ++a) {
    fields.push_back(read_tensor(dir / weight_file_name(a)));
  }
  std::vector<std::size_t> dims = fields[0].dims;
  dims[0] += 1;
  GridSpec grid(dims);
  std::vector<double> values;
  values.reserve(grid.edge_count());
  for (std::size_t a = 0; a < d; ++a) {
    if (fields[a].dims != grid.field_dims(a)) {
      throw TensorIoError(TensorIoError::Kind::shape,
                          "weight field " + std::to_string(a) + " has inconsistent shape");
    }
    values.insert(values.end(), fields[a].data.begin(), fields[a].data.end());
  }
  return EdgeWeights(std::move(grid), std::move(values));
}

SparseMatrix build_laplacian(const GridSpec& spec, std::span<const double> w) {
  if (w.size() != spec.edge_count()) {
    throw std::invalid_argument("weight vector length does not match edge count");
  }
  const std::size_t n = spec.vertex_count();
  std::vector<double> degree(n, 0.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * w.size());
  const auto edges = spec.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!(w[e] > 0.0) || !std::isfinite(w[e])) {
      throw std::invalid_argument("edge weights must be finite and strictly positive");
    }
    const auto i = static_cast<int>(edges[e].tail);
    const auto j = static_cast<int>(edges[e].head);
    triplets.emplace_back(i, j, w[e]);
    triplets.emplace_back(j, i, w[e]);
    degree[edges[e].tail] += w[e];
    degree[edges[e].head] += w[e];
  }
  for (std::size_t i = 0; i < n; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), -degree[i]);
  }
  SparseMatrix lap(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  lap.setFromTriplets(triplets.begin(), triplets.end());
  lap.makeCompressed();
  return lap;
}

std::vector<std::size_t> parallel_neighbors(const GridSpec& spec, std::size_t e) {
  const std::size_t a = spec.edge_axis(e);
  const auto fd = spec.field_dims(a);
  auto c = spec.edge_field_coords(e);
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < fd.size(); ++b) {
    if (c[b] > 0) {
      --c[b];
      out.push_back(spec.edge_from_field(a, c));
      ++c[b];
    }
    if (c[b] + 1 < fd[b]) {
      ++c[b];
      out.push_back(spec.edge_from_field(a, c));
      --c[b];
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

EdgeWeights upsample_weights(const EdgeWeights& w, const GridSpec& dst) {
  const GridSpec& src = w.grid();
  if (src.dim() != dst.dim()) {
    throw std::invalid_argument("upsampling requires grids of the same dimension");
  }
  const std::size_t d = src.dim();
  for (std::size_t a = 0; a < d; ++a) {
    if (dst.extent(a) < src.extent(a)) {
      throw std::invalid_argument("upsampling target is smaller than the source grid");
    }
  }

  std::vector<double> out;
  out.reserve(dst.edge_count());
  std::vector<std::size_t> k(d), base(d), corner(d);
  std::vector<double> frac(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto sfd = src.field_dims(a);
    const auto dfd = dst.field_dims(a);
    const auto field = w.axis_field(a);
    std::fill(k.begin(), k.end(), 0);
    const std::size_t count = dst.axis_edge_count(a);
    for (std::size_t idx = 0; idx < count; ++idx) {
      for (std::size_t b = 0; b < d; ++b) {
        // Unit-interval position of the destination sample, mapped into the
        // source field's index space.
        const double src_span = static_cast<double>(src.extent(b) - 1);
        const double dst_span = static_cast<double>(dst.extent(b) - 1);
        double s = 0.0;
        if (b == a) {
          s = (static_cast<double>(k[b]) + 0.5) / dst_span * src_span - 0.5;
        } else {
          s = static_cast<double>(k[b]) / dst_span * src_span;
        }
        s = std::clamp(s, 0.0, static_cast<double>(sfd[b] - 1));
        base[b] = std::min(static_cast<std::size_t>(std::floor(s)), sfd[b] - 1);
        frac[b] = s - static_cast<double>(base[b]);
      }
      double value = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (std::size_t b = 0; b < d; ++b) {
          const bool up = (mask >> b) & 1U;
          weight *= up ? frac[b] : 1.0 - frac[b];
          corner[b] = std::min(base[b] + (up ? 1 : 0), sfd[b] - 1);
          flat = flat * sfd[b] + corner[b];
        }
        if (weight != 0.0) value += weight * field[flat];
      }
      out.push_back(value);
      for (std::size_t b = d; b-- > 0;) {
        if (++k[b] < dfd[b]) break;
        k[b] = 0;
      }
    }
  }
  return EdgeWeights(dst, std::move(out));
}

}  // namespace gml
