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
#include <random>
#include <sstream>

#include "doctest.h"
#include "gml/config.hpp"
#include "gml/tensor_store.hpp"
#include "test_util.hpp"

using namespace gml;
using gml::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_read_error(const std::filesystem::path& p, TensorIoError::Kind kind) {
  bool thrown = false;
  try {
    read_tensor(p);
  } catch (const TensorIoError& e) {
    thrown = true;
    CHECK(e.kind() == kind);
  }
  CHECK(thrown);
}

}  // namespace

TEST_CASE("scalar tensor file is an 18 byte header plus one double") {
  TempDir dir("scalar");
  write_tensor(dir / "s.gmlt", Tensor({1}, {1.0}));
  const auto bytes = slurp(dir / "s.gmlt");
  REQUIRE(bytes.size() == 26);
  CHECK(bytes.substr(0, 4) == "GMLT");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 0);
  CHECK(static_cast<unsigned char>(bytes[9]) == 1);
}

TEST_CASE("write then read is bit-identical over random shapes") {
  TempDir dir("roundtrip");
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> extent(1, 5);
  std::uniform_int_distribution<std::size_t> rank(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::size_t> dims(rank(rng));
    for (auto& d : dims) d = extent(rng);
    Tensor t = Tensor::zeros(dims);
    std::normal_distribution<double> normal(0.0, 1e3);
    for (double& x : t.data) x = normal(rng);
    if (trial == 0) t.data[0] = -0.0;
    write_tensor(dir / "t.gmlt", t);
    const Tensor back = read_tensor(dir / "t.gmlt");
    CHECK(back.dims == t.dims);
    REQUIRE(back.data.size() == t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(back.data[i]) == std::bit_cast<std::uint64_t>(t.data[i]));
    }
  }
}

TEST_CASE("tensors with NaN or Inf are rejected on write") {
  TempDir dir("nan");
  CHECK_THROWS(write_tensor(dir / "n.gmlt", Tensor({2}, {1.0, std::nan("")})));
  CHECK_THROWS(
      write_tensor(dir / "i.gmlt", Tensor({1}, {std::numeric_limits<double>::infinity()})));
  CHECK_FALSE(std::filesystem::exists(dir / "n.gmlt"));
}

TEST_CASE("shape disagreement is rejected") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 0.0)), std::invalid_argument);
}

TEST_CASE("read errors are classified") {
  TempDir dir("errors");
  write_tensor(dir / "ok.gmlt", Tensor({3, 4}, std::vector<double>(12, 0.5)));
  const auto good = slurp(dir / "ok.gmlt");

  SUBCASE("bad magic") {
    auto bad = good;
    bad.replace(0, 4, "XXXX");
    std::ofstream(dir / "bad.gmlt", std::ios::binary) << bad;
    expect_read_error(dir / "bad.gmlt", TensorIoError::Kind::bad_magic);
  }
  SUBCASE("truncated mid-data") {
    std::ofstream(dir / "trunc.gmlt", std::ios::binary) << good.substr(0, good.size() - 12);
    expect_read_error(dir / "trunc.gmlt", TensorIoError::Kind::truncated);
  }
  SUBCASE("truncated header") {
    std::ofstream(dir / "hdr.gmlt", std::ios::binary) << good.substr(0, 7);
    expect_read_error(dir / "hdr.gmlt", TensorIoError::Kind::truncated);
  }
  SUBCASE("unknown version") {
    auto bad = good;
    bad[4] = 9;
    std::ofstream(dir / "ver.gmlt", std::ios::binary) << bad;
    expect_read_error(dir / "ver.gmlt", TensorIoError::Kind::unsupported_version);
  }
  SUBCASE("unknown dtype") {
    auto bad = good;
    bad[8] = 3;
    std::ofstream(dir / "dt.gmlt", std::ios::binary) << bad;
    expect_read_error(dir / "dt.gmlt", TensorIoError::Kind::unsupported_dtype);
  }
  SUBCASE("NaN payload") {
    auto bad = good;
    const double nan = std::nan("");
    bad.replace(bad.size() - 8, 8, reinterpret_cast<const char*>(&nan), 8);
    std::ofstream(dir / "nan.gmlt", std::ios::binary) << bad;
    expect_read_error(dir / "nan.gmlt", TensorIoError::Kind::non_finite);
  }
  SUBCASE("missing file") {
    expect_read_error(dir / "absent.gmlt", TensorIoError::Kind::io);
  }
}

TEST_CASE("csv export prints full precision rows") {
  CHECK(to_csv(Tensor({2, 2}, {0, 1, 2, 3})) == "0,1\n2,3\n");
  CHECK(to_csv(Tensor({1, 1}, {0.1})) == "0.10000000000000001\n");
  TempDir dir("csv");
  export_csv(Tensor({2, 2}, {0, 1, 2, 3}), dir / "t.csv");
  CHECK(slurp(dir / "t.csv") == "0,1\n2,3\n");
}

TEST_CASE("pgm export") {
  TempDir dir("pgm");
  SUBCASE("min-max normalized 16-bit") {
    export_pgm(Tensor({2, 3}, {0, 1, 2, 3, 4, 5}), dir / "a.pgm");
    const auto bytes = slurp(dir / "a.pgm");
    const std::string header = "P5\n3 2\n65535\n";
    REQUIRE(bytes.size() == header.size() + 12);
    CHECK(bytes.substr(0, header.size()) == header);
    auto px = [&](std::size_t i) {
      return static_cast<unsigned char>(bytes[header.size() + 2 * i]) * 256u +
             static_cast<unsigned char>(bytes[header.size() + 2 * i + 1]);
    };
    CHECK(px(0) == 0);
    CHECK(px(5) == 65535);
    CHECK(px(1) == 13107);
  }
  SUBCASE("constant tensor maps to zeros") {
    export_pgm(Tensor({2, 2}, std::vector<double>(4, 7.0)), dir / "c.pgm");
    const auto bytes = slurp(dir / "c.pgm");
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(bytes.size() == header.size() + 8);
    for (std::size_t i = header.size(); i < bytes.size(); ++i) CHECK(bytes[i] == 0);
  }
  SUBCASE("3-D tensor is a shape error") {
    bool thrown = false;
    try {
      export_pgm(Tensor::zeros({2, 2, 2}), dir / "x.pgm");
    } catch (const TensorIoError& e) {
      thrown = e.kind() == TensorIoError::Kind::shape;
    }
    CHECK(thrown);
  }
}

TEST_CASE("config parses the synthetic experiment settings") {
  const auto cfg = parse_config(R"({"d": 2, "n": 50, "epsilon": 1.2e-2, "substeps": 100,
                                    "sinkhorn_iters": 50, "lambda_s": 0.03})");
  CHECK(cfg.d == 2);
  CHECK(cfg.n == 50);
  CHECK(cfg.epsilon == 1.2e-2);
  CHECK(cfg.substeps == 100);
  CHECK(cfg.sinkhorn_iters == 50);
  CHECK(cfg.lambda_s == 0.03);
  CHECK(cfg.loss == LossKind::l2);
  CHECK(cfg.grid().vertex_count() == 2500);
}

TEST_CASE("config nested sections") {
  const auto cfg = parse_config(R"({"d": 3, "n": 4, "epsilon": 0.1, "substeps": 2,
      "sinkhorn_iters": 3, "loss": "kl", "seed": 42,
      "lbfgs": {"max_iters": 7, "memory": 0, "line_search": {"shrink": 0.25}},
      "init": {"mode": "log_uniform", "low": 0.5, "high": 2}})");
  CHECK(cfg.loss == LossKind::kl);
  CHECK(cfg.seed == 42);
  CHECK(cfg.lbfgs.max_iters == 7);
  CHECK(cfg.lbfgs.memory == 0);
  CHECK(cfg.lbfgs.shrink == 0.25);
  CHECK(cfg.init.mode == InitOptions::Mode::log_uniform);
  CHECK(cfg.init.low == 0.5);
}

TEST_CASE("config rejects invalid content") {
  const std::string base = R"("d": 2, "n": 5, "substeps": 1, "sinkhorn_iters": 1)";
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"d": 2, "n": 5, "epsilon": 1, "sinkhorn_iters": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": 1, "frames": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": 1, "loss": "l3"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": 1, "init": {"mode": "log_uniform", "low": 0}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{" + base + R"(, "epsilon": "big"})"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
}

TEST_CASE("every accepted config satisfies its invariants") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-0.5, 1.5);
  int accepted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::ostringstream text;
    text << R"({"d": )" << (unit(rng) > 0.5 ? 2 : 3) << R"(, "n": )"
         << static_cast<int>(unit(rng) * 6) << R"(, "epsilon": )" << unit(rng)
         << R"(, "substeps": )" << static_cast<int>(unit(rng) * 4) << R"(, "sinkhorn_iters": )"
         << static_cast<int>(unit(rng) * 4) << R"(, "frames": )"
         << static_cast<int>(unit(rng) * 5) << "}";
    try {
      const auto cfg = parse_config(text.str());
      CHECK_NOTHROW(cfg.validate());
      CHECK(cfg.epsilon > 0.0);
      CHECK(cfg.substeps >= 1);
      CHECK(cfg.sinkhorn_iters >= 1);
      CHECK(cfg.frames >= 2);
      CHECK(cfg.n >= 2);
      ++accepted;
    } catch (const ConfigError&) {
    }
  }
  CHECK(accepted > 0);
}

TEST_CASE("missing config file is an I/O error") {
  CHECK_THROWS_AS(read_config("/nonexistent/gml_config.json"), TensorIoError);
}
