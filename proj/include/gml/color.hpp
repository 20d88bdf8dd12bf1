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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gml/grid_graph.hpp"
#include "gml/heat_kernel.hpp"
#include "gml/tensor_store.hpp"

namespace gml {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h);

  std::array<std::uint8_t, 3> at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb);
};

/// Binary PPM (P6, maxval 255).
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Mass on an n^3 RGB grid, red axis first. Bin j has center (j + 1/2) / n.
struct ColorHistogram {
  std::size_t bins = 0;
  std::vector<double> mass;

  GridSpec grid() const { return GridSpec::cube(3, bins); }
  Tensor to_tensor() const;
  static ColorHistogram from_tensor(const Tensor& t);
};

std::array<double, 3> bin_center(std::size_t bins, std::size_t index);

ColorHistogram image_to_histogram(const RgbImage& img, std::size_t bins);

/// Per-bin target colours in [0,1]^3. Bins where the source has no mass are
/// flagged undefined until fill_undefined runs.
struct ColorMap {
  std::size_t bins = 0;
  std::vector<std::array<double, 3>> values;
  std::vector<bool> defined;

  Tensor to_tensor() const;  // shape (n, n, n, 3)
};

/// Barycentric projection of the Sinkhorn plan between a and b:
/// T(i) = sum_j P_ij x_j / sum_j P_ij, evaluated with kernel applications
/// only (the plan is never formed).
ColorMap barycentric_map(const Kernel& kernel, std::span<const double> a,
                         std::span<const double> b, int iterations);

/// Copies each undefined bin from the nearest defined bin (squared index
/// distance, lowest index on ties).
void fill_undefined(ColorMap& map);

/// Maps each pixel through T by trilinear interpolation between bin
/// centers, then rounds back to 8 bits.
RgbImage apply_color_map(const RgbImage& img, const ColorMap& map);

/// Joint bilateral filter of `img` guided by `guide`, square window of
/// radius ceil(3 spatial_sigma). Range distances are on [0,1] colours.
/// Returns channel values in [0,1] without quantization.
std::vector<double> bilateral_filter_values(const RgbImage& img, const RgbImage& guide,
                                            double spatial_sigma, double range_sigma);
RgbImage bilateral_smooth(const RgbImage& img, const RgbImage& guide, double spatial_sigma = 3.0,
                          double range_sigma = 0.1);

}  // namespace gml
