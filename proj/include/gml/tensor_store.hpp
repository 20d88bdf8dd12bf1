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
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gml {

/// Dense row-major tensor of doubles. Histograms, weight fields and
/// diagnostic matrices all travel through this type.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> dims_in, std::vector<double> data_in);

  static Tensor zeros(std::vector<std::size_t> dims_in);

  std::size_t ndim() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  /// Throws std::invalid_argument if data length disagrees with dims or any
  /// value is NaN/Inf.
  void validate() const;
};

std::size_t product(std::span<const std::size_t> dims);

class TensorIoError : public std::runtime_error {
 public:
  enum class Kind {
    io,
    bad_magic,
    unsupported_version,
    unsupported_dtype,
    truncated,
    non_finite,
    shape,
  };

  TensorIoError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// GMLT layout: "GMLT", u32 version (1), u8 dtype (0 = f64), u8 ndim,
// ndim x u64 dims, then little-endian f64 payload. All integers little-endian.
inline constexpr std::uint32_t kGmltVersion = 1;
inline constexpr std::uint8_t kGmltDtypeF64 = 0;

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Binary 16-bit PGM (P5), per-file min-max normalized to 0..65535. A
/// constant tensor maps to all zeros.
void export_pgm(const Tensor& t, const std::filesystem::path& path);

/// One line per leading index, values printed with 17 significant digits.
void export_csv(const Tensor& t, const std::filesystem::path& path);
std::string to_csv(const Tensor& t);

}  // namespace gml
