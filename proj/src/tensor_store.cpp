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

#include "gml/tensor_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace gml {

namespace {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename U>
U get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return static_cast<U>(v);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw TensorIoError(TensorIoError::Kind::io, "cannot open " + path.string() + " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw TensorIoError(TensorIoError::Kind::io, "write failed: " + path.string());
  }
}

std::string format_g17(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

}  // namespace

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> dims_in, std::vector<double> data_in)
    : dims(std::move(dims_in)), data(std::move(data_in)) {
  if (product(dims) != data.size()) {
    throw std::invalid_argument("tensor data length does not match dims");
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> dims_in) {
  const std::size_t n = product(dims_in);
  return Tensor(std::move(dims_in), std::vector<double>(n, 0.0));
}

void Tensor::validate() const {
  if (dims.empty() || dims.size() > 255) {
    throw std::invalid_argument("tensor rank must be in 1..255");
  }
  if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
    throw std::invalid_argument("tensor dims must be positive");
  }
  if (product(dims) != data.size()) {
    throw std::invalid_argument("tensor data length does not match dims");
  }
  if (!std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); })) {
    throw std::invalid_argument("tensor contains non-finite values");
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    const bool finite = std::all_of(t.data.begin(), t.data.end(),
                                    [](double x) { return std::isfinite(x); });
    throw TensorIoError(finite ? TensorIoError::Kind::shape : TensorIoError::Kind::non_finite,
                        std::string("refusing to write tensor: ") + e.what());
  }

  std::string bytes;
  bytes.reserve(10 + 8 * t.ndim() + 8 * t.size());
  bytes.append("GMLT");
  put_le<std::uint32_t>(bytes, kGmltVersion);
  put_le<std::uint8_t>(bytes, kGmltDtypeF64);
  put_le<std::uint8_t>(bytes, static_cast<std::uint8_t>(t.ndim()));
  for (std::size_t d : t.dims) {
    put_le<std::uint64_t>(bytes, d);
  }
  for (double x : t.data) {
    put_le<std::uint64_t>(bytes, std::bit_cast<std::uint64_t>(x));
  }
  write_all(path, bytes);
}

Tensor read_tensor(const std::filesystem::path& path) {
  using Kind = TensorIoError::Kind;
  const std::string bytes = read_all(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::string name = path.string();

  if (bytes.size() < 4 || bytes.compare(0, 4, "GMLT") != 0) {
    throw TensorIoError(Kind::bad_magic, "not a GMLT file: " + name);
  }
  if (bytes.size() < 10) {
    throw TensorIoError(Kind::truncated, "truncated header: " + name);
  }
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kGmltVersion) {
    throw TensorIoError(Kind::unsupported_version,
                        "unsupported GMLT version " + std::to_string(version) + ": " + name);
  }
  const auto dtype = get_le<std::uint8_t>(p + 8);
  if (dtype != kGmltDtypeF64) {
    throw TensorIoError(Kind::unsupported_dtype,
                        "unsupported dtype code " + std::to_string(dtype) + ": " + name);
  }
  const std::size_t ndim = get_le<std::uint8_t>(p + 9);
  if (ndim == 0) {
    throw TensorIoError(Kind::shape, "zero-rank tensor: " + name);
  }
  std::size_t offset = 10;
  if (bytes.size() < offset + 8 * ndim) {
    throw TensorIoError(Kind::truncated, "truncated header: " + name);
  }
  std::vector<std::size_t> dims(ndim);
  for (auto& d : dims) {
    d = static_cast<std::size_t>(get_le<std::uint64_t>(p + offset));
    offset += 8;
    if (d == 0) {
      throw TensorIoError(Kind::shape, "zero-length dimension: " + name);
    }
  }
  const std::size_t count = product(dims);
  if ((bytes.size() - offset) / 8 < count) {
    throw TensorIoError(Kind::truncated, "truncated data: " + name);
  }
  std::vector<double> data(count);
  for (auto& x : data) {
    x = std::bit_cast<double>(get_le<std::uint64_t>(p + offset));
    offset += 8;
    if (!std::isfinite(x)) {
      throw TensorIoError(Kind::non_finite, "non-finite value in " + name);
    }
  }
  return Tensor(std::move(dims), std::move(data));
}

void export_pgm(const Tensor& t, const std::filesystem::path& path) {
  if (t.ndim() != 2) {
    throw TensorIoError(TensorIoError::Kind::shape,
                        "PGM export needs a 2-D tensor, got rank " + std::to_string(t.ndim()));
  }
  t.validate();
  const auto [lo_it, hi_it] = std::minmax_element(t.data.begin(), t.data.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  std::string bytes = "P5\n" + std::to_string(t.dims[1]) + " " + std::to_string(t.dims[0]) +
                      "\n65535\n";
  for (double x : t.data) {
    std::uint32_t level = 0;
    if (range > 0.0) {
      level = static_cast<std::uint32_t>(std::lround((x - lo) / range * 65535.0));
      level = std::min<std::uint32_t>(level, 65535);
    }
    // PGM samples wider than one byte are big-endian.
    bytes.push_back(static_cast<char>(level >> 8));
    bytes.push_back(static_cast<char>(level & 0xff));
  }
  write_all(path, bytes);
}

std::string to_csv(const Tensor& t) {
  t.validate();
  const std::size_t rows = t.dims[0];
  const std::size_t cols = t.size() / rows;
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c > 0) out.push_back(',');
      out += format_g17(t.data[r * cols + c]);
    }
    out.push_back('\n');
  }
  return out;
}

void export_csv(const Tensor& t, const std::filesystem::path& path) { write_all(path, to_csv(t)); }

}  // namespace gml
