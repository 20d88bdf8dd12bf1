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

#include <fstream>
#include <numeric>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "gml/color.hpp"
#include "gml/datagen.hpp"
#include "gml/sinkhorn.hpp"
#include "test_util.hpp"

using namespace gml;
using gml::test::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run gml_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string config(int d, int n, int frames, const std::string& extra = "") {
  return "{\"d\": " + std::to_string(d) + ", \"n\": " + std::to_string(n) +
         ", \"epsilon\": 0.04, \"substeps\": 5, \"sinkhorn_iters\": 10, \"frames\": " +
         std::to_string(frames) + extra + "}";
}

const char* kPattern = R"({
  "base": 1,
  "regions": [{"shape": "box", "lo": [2, 3], "hi": [5, 4], "factor": 0.2}],
  "sequences": [{"type": "forward",
                 "from": {"gaussian": {"center": [3.5, 1], "sigma": 1}},
                 "to": {"gaussian": {"center": [3.5, 6], "sigma": 1}}}]
})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(gml_run({}).code == cli::kUsage);
  CHECK(gml_run({"frobnicate"}).code == cli::kUsage);
  CHECK(gml_run({"info"}).code == cli::kUsage);
  CHECK(gml_run({"export", "--input", "x", "--format", "png", "--out", "y"}).code == cli::kUsage);
  CHECK(gml_run({"--help"}).code == cli::kOk);
}

TEST_CASE("gen writes frames and weight fields deterministically") {
  TempDir dir("gen");
  write_text(dir / "cfg.json", config(2, 50, 11, R"(, "substeps": 5)"));
  write_text(dir / "pattern.json", R"({
    "regions": [{"shape": "disk", "center": [25, 25], "radius": 8, "factor": 0.1}],
    "sequences": [{"type": "forward",
                   "from": {"gaussian": {"center": [25, 5], "sigma": 2}},
                   "to": {"gaussian": {"center": [25, 44], "sigma": 2}}}]})");
  for (const char* out : {"a", "b"}) {
    const auto r = gml_run({"gen", "--config", (dir / "cfg.json").string(), "--pattern",
                            (dir / "pattern.json").string(), "--out", (dir / out).string()});
    REQUIRE(r.code == cli::kOk);
  }
  std::size_t frames = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
    if (entry.path().extension() == ".gmlt" &&
        entry.path().filename().string().starts_with("frame_")) {
      ++frames;
      CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    }
  }
  CHECK(frames == 11);
  CHECK(std::filesystem::exists(dir / "a" / "weights_axis0.gmlt"));
  CHECK(std::filesystem::exists(dir / "a" / "weights_axis1.gmlt"));
  CHECK_FALSE(std::filesystem::exists(dir / "a" / "weights_axis2.gmlt"));
  CHECK(slurp(dir / "a" / "weights_axis0.gmlt") == slurp(dir / "b" / "weights_axis0.gmlt"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
}

TEST_CASE("gen error codes") {
  TempDir dir("generr");
  write_text(dir / "cfg.json", config(2, 8, 4));
  CHECK(gml_run({"gen", "--config", (dir / "cfg.json").string(), "--pattern",
                 (dir / "missing.json").string(), "--out", (dir / "o").string()})
            .code == cli::kIo);
  write_text(dir / "bad.json", R"({"d": 2, "n": 8, "epsilon": 0})");
  write_text(dir / "pattern.json", kPattern);
  CHECK(gml_run({"gen", "--config", (dir / "bad.json").string(), "--pattern",
                 (dir / "pattern.json").string(), "--out", (dir / "o").string()})
            .code == cli::kUsage);
  CHECK(gml_run({"gen", "--config", (dir / "nope.json").string(), "--pattern",
                 (dir / "pattern.json").string(), "--out", (dir / "o").string()})
            .code == cli::kIo);
}

TEST_CASE("gen with several sequences and learn on all of them") {
  TempDir dir("learn");
  write_text(dir / "cfg.json",
             config(2, 8, 4, R"(, "lambda_s": 0.03, "lbfgs": {"max_iters": 3})"));
  write_text(dir / "pattern.json", R"({
    "regions": [{"shape": "box", "lo": [2, 3], "hi": [5, 4], "factor": 0.2}],
    "sequences": [
      {"type": "forward", "from": {"gaussian": {"center": [3, 1], "sigma": 1}},
                          "to": {"gaussian": {"center": [3, 6], "sigma": 1}}},
      {"type": "forward", "from": {"gaussian": {"center": [1, 3], "sigma": 1}},
                          "to": {"gaussian": {"center": [6, 3], "sigma": 1}}},
      {"type": "moving_gaussian", "sigma": 1, "waypoints": [[1, 1], [6, 6]]},
      {"type": "moving_gaussian", "sigma": 1, "waypoints": [[6, 1], [1, 6]]}]})");
  REQUIRE(gml_run({"gen", "--config", (dir / "cfg.json").string(), "--pattern",
                   (dir / "pattern.json").string(), "--out", (dir / "gt").string()})
              .code == cli::kOk);
  std::vector<std::string> args{"--threads", "2", "learn", "--config", (dir / "cfg.json").string(),
                                "--out", (dir / "learned").string(), "--log",
                                (dir / "log.csv").string()};
  for (int k = 0; k < 4; ++k) {
    CHECK(std::filesystem::exists(dir / "gt" / ("sequence_" + std::to_string(k)) / "manifest.json"));
    args.push_back("--sequence");
    args.push_back((dir / "gt" / ("sequence_" + std::to_string(k))).string());
  }
  const auto r = gml_run(args);
  REQUIRE(r.code == cli::kOk);
  CHECK(std::filesystem::exists(dir / "learned" / "weights_axis1.gmlt"));
  CHECK(std::filesystem::exists(dir / "learned" / "summary.json"));

  std::ifstream log(dir / "log.csv");
  std::string line;
  std::getline(log, line);
  CHECK(line == "iteration,value,data_fit,f_c,f_s,grad_inf,seconds");
  int rows = 0;
  std::string last;
  while (std::getline(log, line)) {
    if (line.starts_with("#")) {
      last = line;
      continue;
    }
    CHECK(line.starts_with(std::to_string(rows) + ","));
    ++rows;
  }
  CHECK(rows == 4);  // iteration 0 plus three L-BFGS iterations
  CHECK(last == "# status=max_iterations");
}

TEST_CASE("learn rejects sequences on another grid") {
  TempDir dir("mismatch");
  write_text(dir / "cfg8.json", config(2, 8, 3));
  write_text(dir / "cfg6.json", config(2, 6, 3));
  write_text(dir / "pattern.json", R"({"sequences": [{"type": "moving_gaussian", "sigma": 1,
                                       "waypoints": [[1, 1], [4, 4]]}]})");
  REQUIRE(gml_run({"gen", "--config", (dir / "cfg6.json").string(), "--pattern",
                   (dir / "pattern.json").string(), "--out", (dir / "s6").string()})
              .code == cli::kOk);
  CHECK(gml_run({"learn", "--config", (dir / "cfg8.json").string(), "--sequence",
                 (dir / "s6").string(), "--out", (dir / "o").string()})
            .code == cli::kUsage);
  CHECK(gml_run({"learn", "--config", (dir / "cfg8.json").string(), "--sequence",
                 (dir / "absent").string(), "--out", (dir / "o").string()})
            .code == cli::kIo);
}

TEST_CASE("interp with two steps returns the blurred endpoints") {
  TempDir dir("interp");
  const GridSpec g = GridSpec::cube(2, 9);
  const auto r0 = gaussian(g, std::vector<double>{2, 2}, 1.0);
  const auto r1 = gaussian(g, std::vector<double>{6, 6}, 1.0);
  write_tensor(dir / "r0.gmlt", Tensor({9, 9}, r0));
  write_tensor(dir / "r1.gmlt", Tensor({9, 9}, r1));
  write_text(dir / "cfg.json", config(2, 9, 2));
  auto run = [&](const std::string& out, const std::string& steps) {
    return gml_run({"interp", "--from", (dir / "r0.gmlt").string(), "--to",
                    (dir / "r1.gmlt").string(), "--steps", steps, "--config",
                    (dir / "cfg.json").string(), "--out", (dir / out).string()});
  };
  REQUIRE(run("two", "2").code == cli::kOk);
  const auto [grid, seq] = read_sequence(dir / "two");
  const DiffusionOperator op(EdgeWeights::constant(g), 0.04, 5);
  const auto k0 = op.apply(r0);
  const auto k1 = op.apply(r1);
  for (std::size_t i = 0; i < k0.size(); ++i) {
    CHECK(seq.frames[0][i] == doctest::Approx(k0[i]).epsilon(1e-12));
    CHECK(seq.frames[1][i] == doctest::Approx(k1[i]).epsilon(1e-12));
  }

  REQUIRE(run("a", "5").code == cli::kOk);
  REQUIRE(run("b", "5").code == cli::kOk);
  for (int k = 0; k < 5; ++k) {
    const std::string f = "frame_00" + std::to_string(k) + ".gmlt";
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  write_tensor(dir / "small.gmlt", Tensor({3, 3}, std::vector<double>(9, 1.0 / 9)));
  CHECK(gml_run({"interp", "--from", (dir / "r0.gmlt").string(), "--to",
                 (dir / "small.gmlt").string(), "--config", (dir / "cfg.json").string(), "--out",
                 (dir / "x").string()})
            .code == cli::kUsage);

  // Weights for a finer grid than the histograms are a shape error.
  save_weights(dir / "w12", EdgeWeights::constant(GridSpec::cube(2, 12)));
  CHECK(gml_run({"interp", "--weights", (dir / "w12").string(), "--from",
                 (dir / "r0.gmlt").string(), "--to", (dir / "r1.gmlt").string(), "--config",
                 (dir / "cfg.json").string(), "--out", (dir / "y").string()})
            .code == cli::kUsage);
}

TEST_CASE("transfer onto the image's own histogram is near identity") {
  TempDir dir("transfer");
  RgbImage img(20, 12);
  for (std::size_t y = 0; y < 12; ++y) {
    for (std::size_t x = 0; x < 20; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(x * 12), static_cast<std::uint8_t>(y * 20),
                     static_cast<std::uint8_t>(100)});
    }
  }
  write_ppm(dir / "src.ppm", img);
  const std::size_t n = 8;
  write_tensor(dir / "hist.gmlt", image_to_histogram(img, n).to_tensor());
  write_text(dir / "cfg.json", R"({"d": 3, "n": 8, "epsilon": 0.004, "substeps": 10,
                                   "sinkhorn_iters": 50})");
  const auto r = gml_run({"transfer", "--source-image", (dir / "src.ppm").string(),
                          "--target-hist", (dir / "hist.gmlt").string(), "--config",
                          (dir / "cfg.json").string(), "--out", (dir / "out.ppm").string(),
                          "--map-out", (dir / "map.gmlt").string()});
  REQUIRE(r.code == cli::kOk);
  const auto out = read_ppm(dir / "out.ppm");
  CHECK(out.width == 20);
  CHECK(out.height == 12);
  // Quantization to bins (256 / 2n) plus a little diffusion blur.
  double mean = 0.0;
  for (std::size_t k = 0; k < out.pixels.size(); ++k) {
    mean += std::abs(int(out.pixels[k]) - int(img.pixels[k]));
  }
  mean /= static_cast<double>(out.pixels.size());
  CHECK(mean <= 256.0 / (2.0 * n));
  CHECK(read_tensor(dir / "map.gmlt").dims == std::vector<std::size_t>{n, n, n, 3});

  REQUIRE(gml_run({"transfer", "--source-image", (dir / "src.ppm").string(), "--target-image",
                   (dir / "src.ppm").string(), "--config", (dir / "cfg.json").string(), "--out",
                   (dir / "smooth.ppm").string(), "--bilateral"})
              .code == cli::kOk);
  CHECK(read_ppm(dir / "smooth.ppm").width == 20);

  CHECK(gml_run({"transfer", "--source-image", (dir / "none.ppm").string(), "--target-hist",
                 (dir / "hist.gmlt").string(), "--config", (dir / "cfg.json").string(), "--out",
                 (dir / "o.ppm").string()})
            .code == cli::kIo);
}

TEST_CASE("info and export") {
  TempDir dir("info");
  write_tensor(dir / "t.gmlt", Tensor({2, 3}, {1, 2, 3, 4, 5, -6}));
  const auto r = gml_run({"info", "--input", (dir / "t.gmlt").string()});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "dims: 2x3\nsum: 9\nmin: -6\nmax: 5\n");

  CHECK(gml_run({"export", "--input", (dir / "t.gmlt").string(), "--format", "pgm", "--out",
                 (dir / "t.pgm").string()})
            .code == cli::kOk);
  CHECK(slurp(dir / "t.pgm").starts_with("P5\n3 2\n65535\n"));
  CHECK(gml_run({"export", "--input", (dir / "t.gmlt").string(), "--format", "csv", "--out",
                 (dir / "t.csv").string()})
            .code == cli::kOk);
  CHECK(slurp(dir / "t.csv") == "1,2,3\n4,5,-6\n");

  write_tensor(dir / "cube.gmlt", Tensor::zeros({2, 2, 2}));
  CHECK(gml_run({"export", "--input", (dir / "cube.gmlt").string(), "--format", "pgm", "--out",
                 (dir / "c.pgm").string()})
            .code == cli::kUsage);
  CHECK(gml_run({"info", "--input", (dir / "absent.gmlt").string()}).code == cli::kIo);
}
