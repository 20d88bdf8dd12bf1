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

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gml/color.hpp"
#include "test_util.hpp"

using namespace gml;

namespace {

RgbImage random_image(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  RgbImage img(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
  return img;
}

RgbImage smooth_image(std::size_t w, std::size_t h) {
  RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(255 * x / (w - 1)),
                     static_cast<std::uint8_t>(255 * y / (h - 1)),
                     static_cast<std::uint8_t>((x * 37 + y * 11) % 256)});
    }
  }
  return img;
}

// Separable Gaussian blur with a window clipped at the border and
// renormalized per axis.
std::vector<double> separable_blur(const RgbImage& img, double sigma) {
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  const auto w = static_cast<long>(img.width), h = static_cast<long>(img.height);
  auto pass = [&](const std::vector<double>& in, bool horizontal) {
    std::vector<double> out(in.size());
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        const long c = horizontal ? x : y;
        const long n = horizontal ? w : h;
        double acc[3] = {0, 0, 0}, norm = 0;
        for (long k = std::max(0L, c - radius); k <= std::min(n - 1, c + radius); ++k) {
          const double wt = std::exp(-static_cast<double>((k - c) * (k - c)) / (2 * sigma * sigma));
          const long q = horizontal ? y * w + k : k * w + x;
          for (int ch = 0; ch < 3; ++ch) acc[ch] += wt * in[3 * q + ch];
          norm += wt;
        }
        for (int ch = 0; ch < 3; ++ch) out[3 * (y * w + x) + ch] = acc[ch] / norm;
      }
    }
    return out;
  };
  std::vector<double> v(img.pixels.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = img.pixels[k] / 255.0;
  return pass(pass(v, true), false);
}

ColorMap identity_map(std::size_t n) {
  ColorMap m;
  m.bins = n;
  for (std::size_t i = 0; i < n * n * n; ++i) {
    m.values.push_back(bin_center(n, i));
    m.defined.push_back(true);
  }
  return m;
}

}  // namespace

TEST_CASE("ppm roundtrip and errors") {
  test::TempDir dir("ppm");
  std::mt19937_64 rng(1);
  const auto img = random_image(rng, 7, 5);
  write_ppm(dir / "a.ppm", img);
  const auto back = read_ppm(dir / "a.ppm");
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.pixels == img.pixels);

  std::ofstream(dir / "c.ppm", std::ios::binary) << "P6\n# comment\n2 1\n255\n" << std::string(6, 'x');
  CHECK(read_ppm(dir / "c.ppm").at(1, 0)[2] == 'x');

  std::ofstream(dir / "p3.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_ppm(dir / "p3.ppm"), TensorIoError);
  std::ofstream(dir / "t.ppm", std::ios::binary) << "P6\n4 4\n255\n" << std::string(10, 'a');
  CHECK_THROWS_AS(read_ppm(dir / "t.ppm"), TensorIoError);
  CHECK_THROWS_AS(read_ppm(dir / "none.ppm"), TensorIoError);
}

TEST_CASE("histogram of a uniform gray image") {
  RgbImage img(4, 3);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 4; ++x) img.set(x, y, {128, 128, 128});
  }
  const auto h = image_to_histogram(img, 16);
  const GridSpec g = h.grid();
  CHECK(h.mass[g.vertex_index(std::vector<std::size_t>{8, 8, 8})] == 1.0);
  CHECK(std::accumulate(h.mass.begin(), h.mass.end(), 0.0) == 1.0);
}

TEST_CASE("histogram of a half black half white image") {
  RgbImage img(2, 2);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {0, 0, 0});
  img.set(0, 1, {255, 255, 255});
  img.set(1, 1, {255, 255, 255});
  const auto h = image_to_histogram(img, 16);
  CHECK(h.mass[0] == 0.5);
  CHECK(h.mass[16 * 16 * 16 - 1] == 0.5);
}

TEST_CASE("random image histogram sums to one") {
  std::mt19937_64 rng(2);
  const auto h = image_to_histogram(random_image(rng, 13, 11), 8);
  CHECK(std::abs(std::accumulate(h.mass.begin(), h.mass.end(), 0.0) - 1.0) < 1e-12);
  CHECK(h.to_tensor().dims == std::vector<std::size_t>{8, 8, 8});
  CHECK(ColorHistogram::from_tensor(h.to_tensor()).mass == h.mass);
  CHECK_THROWS(ColorHistogram::from_tensor(Tensor::zeros({2, 3, 2})));
}

TEST_CASE("bin centers") {
  const auto c = bin_center(4, 1 * 16 + 2 * 4 + 3);
  CHECK(c[0] == 0.375);
  CHECK(c[1] == 0.625);
  CHECK(c[2] == 0.875);
}

TEST_CASE("identity kernel with b = a maps every occupied bin to itself") {
  std::mt19937_64 rng(3);
  const std::size_t n = 4;
  auto a = test::random_histogram(rng, n * n * n);
  a[5] = 0.0;
  const double s = std::accumulate(a.begin(), a.end(), 0.0);
  for (double& x : a) x /= s;
  const auto map = barycentric_map(DenseKernel::identity(n * n * n), a, a, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      CHECK_FALSE(map.defined[i]);
      continue;
    }
    REQUIRE(map.defined[i]);
    const auto x = bin_center(n, i);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(map.values[i][c] - x[c]) < 1e-12);
  }
}

TEST_CASE("dirac to dirac maps onto the target bin") {
  const std::size_t n = 4;
  const GridSpec g = GridSpec::cube(3, n);
  const DiffusionOperator op(EdgeWeights::constant(g), 0.1, 10);
  std::vector<double> a(g.vertex_count(), 0.0), b(g.vertex_count(), 0.0);
  const std::size_t p = 3, q = 50;
  a[p] = 1.0;
  b[q] = 1.0;
  const auto map = barycentric_map(op, a, b, 30);
  const auto xq = bin_center(n, q);
  REQUIRE(map.defined[p]);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(map.values[p][c] - xq[c]) < 1e-12);
}

TEST_CASE("barycentric map stays in the colour cube") {
  std::mt19937_64 rng(4);
  const std::size_t n = 5;
  const GridSpec g = GridSpec::cube(3, n);
  const DiffusionOperator op(EdgeWeights(g, test::random_vector(rng, g.edge_count(), 0.3, 3.0)),
                             4e-2, 10);
  const auto a = test::random_histogram(rng, g.vertex_count());
  const auto b = test::random_histogram(rng, g.vertex_count());
  const auto map = barycentric_map(op, a, b, 20);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    CHECK(map.defined[i]);
    for (double v : map.values[i]) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(map.to_tensor().dims == std::vector<std::size_t>{n, n, n, 3});
}

TEST_CASE("undefined bins copy the nearest defined bin") {
  ColorMap m = identity_map(3);
  for (std::size_t i = 0; i < m.defined.size(); ++i) m.defined[i] = false;
  m.defined[0] = true;
  m.defined[26] = true;
  m.values[0] = {0.1, 0.2, 0.3};
  m.values[26] = {0.9, 0.8, 0.7};
  fill_undefined(m);
  CHECK(m.values[1] == m.values[0]);
  CHECK(m.values[25] == m.values[26]);
  // (1,1,1) is equidistant; the lower index wins.
  CHECK(m.values[13] == m.values[0]);
  for (bool d : m.defined) CHECK(d);

  ColorMap empty = identity_map(2);
  for (std::size_t i = 0; i < empty.defined.size(); ++i) empty.defined[i] = false;
  CHECK_THROWS(fill_undefined(empty));
}

TEST_CASE("identity map perturbs pixels by at most the quantization bound") {
  std::mt19937_64 rng(5);
  const auto img = random_image(rng, 16, 16);
  for (std::size_t n : {4u, 16u}) {
    const auto out = apply_color_map(img, identity_map(n));
    const int bound = static_cast<int>(std::ceil(256.0 / (2.0 * n)));
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
      CHECK(std::abs(int(out.pixels[k]) - int(img.pixels[k])) <= bound);
    }
  }
}

TEST_CASE("constant map gives a uniform image") {
  std::mt19937_64 rng(6);
  const auto img = random_image(rng, 9, 4);
  ColorMap m = identity_map(4);
  for (auto& v : m.values) v = {0.2, 0.4, 1.0};
  const auto out = apply_color_map(img, m);
  CHECK(out.width == 9);
  CHECK(out.height == 4);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 9; ++x) {
      CHECK(out.at(x, y) == std::array<std::uint8_t, 3>{51, 102, 255});
    }
  }
}

TEST_CASE("bilateral filter leaves a constant image unchanged") {
  RgbImage img(8, 6);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 8; ++x) img.set(x, y, {10, 200, 77});
  }
  CHECK(bilateral_smooth(img, img).pixels == img.pixels);
}

TEST_CASE("bilateral filter with a huge range sigma is a Gaussian blur") {
  const auto img = smooth_image(24, 17);
  const auto oracle = separable_blur(img, 2.0);
  const auto inf = bilateral_filter_values(img, img, 2.0, std::numeric_limits<double>::infinity());
  const auto big = bilateral_filter_values(img, img, 2.0, 1e3);
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    CHECK(std::abs(inf[k] - oracle[k]) < 1e-12);
    CHECK(std::abs(big[k] - oracle[k]) < 1e-3);
  }
}

TEST_CASE("bilateral filter output stays in range and preserves edges") {
  std::mt19937_64 rng(7);
  const auto img = random_image(rng, 12, 12);
  const auto v = bilateral_filter_values(img, img, 3.0, 0.1);
  for (double x : v) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
  // A hard step survives a small range sigma much better than a blur.
  RgbImage step(12, 4);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 12; ++x) {
      const std::uint8_t c = x < 6 ? 0 : 255;
      step.set(x, y, {c, c, c});
    }
  }
  const auto kept = bilateral_smooth(step, step, 3.0, 0.1);
  CHECK(kept.at(5, 1)[0] < 5);
  CHECK(kept.at(6, 1)[0] > 250);
  CHECK_THROWS(bilateral_smooth(step, img));
}
