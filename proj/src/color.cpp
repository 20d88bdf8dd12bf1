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

#include "gml/color.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gml/sinkhorn.hpp"

namespace gml {

RgbImage::RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(3 * w * h, 0) {
  if (w == 0 || h == 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
}

std::array<std::uint8_t, 3> RgbImage::at(std::size_t x, std::size_t y) const {
  const std::size_t k = 3 * (y * width + x);
  return {pixels[k], pixels[k + 1], pixels[k + 2]};
}

void RgbImage::set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb) {
  const std::size_t k = 3 * (y * width + x);
  pixels[k] = rgb[0];
  pixels[k + 1] = rgb[1];
  pixels[k + 2] = rgb[2];
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::string& name) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    throw TensorIoError(TensorIoError::Kind::shape, "malformed PPM header: " + name);
  }
  return static_cast<std::size_t>(std::stoull(tok));
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string());
  }
  const std::string name = path.string();
  if (header_token(in) != "P6") {
    throw TensorIoError(TensorIoError::Kind::bad_magic, "not a binary PPM: " + name);
  }
  const std::size_t w = parse_size(header_token(in), name);
  const std::size_t h = parse_size(header_token(in), name);
  const std::size_t maxval = parse_size(header_token(in), name);
  if (maxval != 255 || w == 0 || h == 0) {
    throw TensorIoError(TensorIoError::Kind::shape, "unsupported PPM (need maxval 255): " + name);
  }
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw TensorIoError(TensorIoError::Kind::truncated, "truncated PPM data: " + name);
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string() + " for writing");
  }
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) {
    throw TensorIoError(TensorIoError::Kind::io, "write failed: " + path.string());
  }
}

Tensor ColorHistogram::to_tensor() const { return Tensor({bins, bins, bins}, mass); }

ColorHistogram ColorHistogram::from_tensor(const Tensor& t) {
  if (t.ndim() != 3 || t.dims[0] != t.dims[1] || t.dims[1] != t.dims[2]) {
    throw std::invalid_argument("colour histogram must be an n x n x n tensor");
  }
  return ColorHistogram{t.dims[0], t.data};
}

std::array<double, 3> bin_center(std::size_t bins, std::size_t index) {
  const std::size_t r = index / (bins * bins);
  const std::size_t g = (index / bins) % bins;
  const std::size_t b = index % bins;
  const double n = static_cast<double>(bins);
  return {(static_cast<double>(r) + 0.5) / n, (static_cast<double>(g) + 0.5) / n,
          (static_cast<double>(b) + 0.5) / n};
}

ColorHistogram image_to_histogram(const RgbImage& img, std::size_t bins) {
  if (bins < 2) {
    throw std::invalid_argument("colour histograms need at least 2 bins per channel");
  }
  ColorHistogram h{bins, std::vector<double>(bins * bins * bins, 0.0)};
  auto bin_of = [bins](std::uint8_t c) {
    return std::min(bins - 1, static_cast<std::size_t>(c) * bins / 256);
  };
  const std::size_t count = img.width * img.height;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t r = bin_of(img.pixels[3 * k]);
    const std::size_t g = bin_of(img.pixels[3 * k + 1]);
    const std::size_t b = bin_of(img.pixels[3 * k + 2]);
    h.mass[(r * bins + g) * bins + b] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(count);
  return h;
}

Tensor ColorMap::to_tensor() const {
  Tensor t = Tensor::zeros({bins, bins, bins, 3});
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) t.data[3 * i + c] = values[i][c];
  }
  return t;
}

ColorMap barycentric_map(const Kernel& kernel, std::span<const double> a,
                         std::span<const double> b, int iterations) {
  const std::size_t n = kernel.size();
  const auto bins = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
  if (bins * bins * bins != n) {
    throw std::invalid_argument("barycentric map needs a cubic colour grid");
  }
  const Scalings s = sinkhorn_scalings(kernel, a, b, iterations);

  const std::vector<double> kv = kernel.apply(s.v);
  std::array<std::vector<double>, 3> knum;
  std::vector<double> weighted(n);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < n; ++j) weighted[j] = s.v[j] * bin_center(bins, j)[c];
    knum[c] = kernel.apply(weighted);
  }

  ColorMap map;
  map.bins = bins;
  map.values.assign(n, {0.0, 0.0, 0.0});
  map.defined.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double den = s.u[i] * kv[i];
    if (!(a[i] > 0.0) || den < kDivisionFloor) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      map.values[i][c] = std::clamp(s.u[i] * knum[c][i] / den, 0.0, 1.0);
    }
    map.defined[i] = true;
  }
  return map;
}

void fill_undefined(ColorMap& map) {
  const std::size_t n = map.values.size();
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < n; ++i) {
    if (map.defined[i]) sources.push_back(i);
  }
  if (sources.empty()) {
    throw std::invalid_argument("colour map has no defined bins");
  }
  const std::size_t nb = map.bins;
  auto coords = [nb](std::size_t i) {
    return std::array<long, 3>{static_cast<long>(i / (nb * nb)), static_cast<long>((i / nb) % nb),
                               static_cast<long>(i % nb)};
  };
  const auto filled = map.values;
  for (std::size_t i = 0; i < n; ++i) {
    if (map.defined[i]) continue;
    const auto ci = coords(i);
    long best = std::numeric_limits<long>::max();
    std::size_t best_j = sources.front();
    for (std::size_t j : sources) {
      const auto cj = coords(j);
      long d2 = 0;
      for (std::size_t c = 0; c < 3; ++c) d2 += (ci[c] - cj[c]) * (ci[c] - cj[c]);
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    map.values[i] = filled[best_j];
  }
  std::fill(map.defined.begin(), map.defined.end(), true);
}

RgbImage apply_color_map(const RgbImage& img, const ColorMap& map) {
  if (std::find(map.defined.begin(), map.defined.end(), false) != map.defined.end()) {
    throw std::invalid_argument("colour map has undefined bins; call fill_undefined first");
  }
  const std::size_t nb = map.bins;
  const double n = static_cast<double>(nb);
  RgbImage out(img.width, img.height);
  const std::size_t count = img.width * img.height;
  for (std::size_t k = 0; k < count; ++k) {
    std::array<std::size_t, 3> base{};
    std::array<double, 3> frac{};
    for (std::size_t c = 0; c < 3; ++c) {
      const double p = static_cast<double>(img.pixels[3 * k + c]) / 255.0;
      const double s = std::clamp(p * n - 0.5, 0.0, n - 1.0);
      base[c] = std::min(static_cast<std::size_t>(s), nb - 2);
      frac[c] = s - static_cast<double>(base[c]);
    }
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      std::size_t idx = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const bool up = (corner >> c) & 1;
        w *= up ? frac[c] : 1.0 - frac[c];
        idx = idx * nb + base[c] + (up ? 1 : 0);
      }
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < 3; ++c) acc[c] += w * map.values[idx][c];
    }
    for (std::size_t c = 0; c < 3; ++c) out.pixels[3 * k + c] = quantize(acc[c]);
  }
  return out;
}

std::vector<double> bilateral_filter_values(const RgbImage& img, const RgbImage& guide,
                                            double spatial_sigma, double range_sigma) {
  if (!(spatial_sigma > 0.0) || !(range_sigma > 0.0)) {
    throw std::invalid_argument("bilateral sigmas must be positive");
  }
  if (img.width != guide.width || img.height != guide.height) {
    throw std::invalid_argument("bilateral guide must match the image size");
  }
  const auto radius = static_cast<long>(std::ceil(3.0 * spatial_sigma));
  const double inv_s = 1.0 / (2.0 * spatial_sigma * spatial_sigma);
  const double inv_r = std::isinf(range_sigma) ? 0.0 : 1.0 / (2.0 * range_sigma * range_sigma);
  const auto w = static_cast<long>(img.width);
  const auto h = static_cast<long>(img.height);
  std::vector<double> out(img.pixels.size());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const std::size_t center = 3 * static_cast<std::size_t>(y * w + x);
      std::array<double, 3> acc{0.0, 0.0, 0.0};
      double norm = 0.0;
      for (long yy = std::max(0L, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
        for (long xx = std::max(0L, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
          const std::size_t q = 3 * static_cast<std::size_t>(yy * w + xx);
          double range2 = 0.0;
          for (std::size_t c = 0; c < 3; ++c) {
            const double d = (static_cast<double>(guide.pixels[center + c]) -
                              static_cast<double>(guide.pixels[q + c])) / 255.0;
            range2 += d * d;
          }
          const double dist2 = static_cast<double>((xx - x) * (xx - x) + (yy - y) * (yy - y));
          const double weight = std::exp(-dist2 * inv_s - range2 * inv_r);
          norm += weight;
          for (std::size_t c = 0; c < 3; ++c) {
            acc[c] += weight * static_cast<double>(img.pixels[q + c]) / 255.0;
          }
        }
      }
      for (std::size_t c = 0; c < 3; ++c) out[center + c] = acc[c] / norm;
    }
  }
  return out;
}

RgbImage bilateral_smooth(const RgbImage& img, const RgbImage& guide, double spatial_sigma,
                          double range_sigma) {
  const auto values = bilateral_filter_values(img, guide, spatial_sigma, range_sigma);
  RgbImage out(img.width, img.height);
  for (std::size_t k = 0; k < values.size(); ++k) out.pixels[k] = quantize(values[k]);
  return out;
}

}  // namespace gml
