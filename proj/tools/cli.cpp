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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gml/color.hpp"
#include "gml/config.hpp"
#include "gml/datagen.hpp"
#include "gml/grid_graph.hpp"
#include "gml/heat_kernel.hpp"
#include "gml/objective.hpp"
#include "gml/sinkhorn.hpp"
#include "gml/tensor_store.hpp"

namespace gml::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  int threads = 1;

  std::string config;
  std::string pattern;
  std::string out;
  std::vector<std::string> sequences;
  std::string log;
  std::string weights;
  std::string from;
  std::string to;
  int steps = 10;
  std::string source_image;
  std::string target_hist;
  std::string target_image;
  bool bilateral = false;
  double spatial_sigma = 3.0;
  double range_sigma = 0.1;
  std::string map_out;
  std::string input;
  std::string format;
};

std::string fmt_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Loads a weights directory, or Euclidean weights when no directory is
// given, and brings them to `grid` (upsampling coarser fields).
EdgeWeights weights_for(const std::string& dir, const GridSpec& grid) {
  if (dir.empty()) return EdgeWeights::constant(grid, 1.0);
  EdgeWeights w = load_weights(dir);
  if (w.grid() == grid) return w;
  if (w.grid().dim() != grid.dim()) {
    throw std::invalid_argument("weight fields do not match the histogram grid dimension");
  }
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    if (w.grid().extent(a) > grid.extent(a)) {
      throw std::invalid_argument("weight fields are finer than the histogram grid");
    }
  }
  return upsample_weights(w, grid);
}

std::vector<double> normalized(std::vector<double> h) {
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  if (!(sum > 0.0)) throw std::invalid_argument("histogram has no mass");
  for (double& x : h) x /= sum;
  return h;
}

int cmd_gen(const Options& o, std::ostream& out) {
  const RunConfig cfg = read_config(o.config);
  const GridSpec grid = cfg.grid();
  const PatternFile pattern = read_pattern(o.pattern, grid.dim());
  if (pattern.sequences.empty()) {
    throw std::invalid_argument("pattern file lists no sequences");
  }
  const EdgeWeights truth = render_metric(grid, pattern.metric);
  const fs::path root(o.out);
  save_weights(root, truth);

  for (std::size_t k = 0; k < pattern.sequences.size(); ++k) {
    const SequenceRecipe& recipe = pattern.sequences[k];
    Sequence seq;
    if (recipe.kind == SequenceRecipe::Kind::forward) {
      const auto r0 = recipe.from.render(grid);
      const auto r1 = recipe.to.render(grid);
      seq = forward_sequence(truth, r0, r1, static_cast<std::size_t>(cfg.frames), cfg.epsilon,
                             cfg.substeps, cfg.sinkhorn_iters);
    } else {
      seq = moving_gaussian_sequence(grid, recipe.waypoints, recipe.sigma,
                                     static_cast<std::size_t>(cfg.frames));
    }
    const fs::path dir =
        pattern.sequences.size() == 1 ? root : root / ("sequence_" + std::to_string(k));
    write_sequence(dir, grid, seq);
    out << "wrote " << seq.size() << " frames to " << dir.string() << "\n";
  }
  out << "wrote " << grid.dim() << " weight fields to " << root.string() << "\n";
  return kOk;
}

int cmd_learn(const Options& o, std::ostream& out) {
  const RunConfig cfg = read_config(o.config);
  const GridSpec grid = cfg.grid();

  ObjectiveSpec spec{grid, {}, cfg.loss, cfg.lambda_c, cfg.lambda_s, cfg.epsilon,
                     cfg.substeps, cfg.sinkhorn_iters, o.threads};
  for (const auto& dir : o.sequences) {
    auto [seq_grid, seq] = read_sequence(dir);
    if (!(seq_grid == grid)) {
      throw std::invalid_argument("sequence " + dir + " does not match the configured grid");
    }
    spec.sequences.push_back(std::move(seq));
  }

  std::unique_ptr<std::ofstream> log;
  if (!o.log.empty()) {
    log = std::make_unique<std::ofstream>(o.log, std::ios::trunc);
    if (!*log) throw TensorIoError(TensorIoError::Kind::io, "cannot open log " + o.log);
    *log << "iteration,value,data_fit,f_c,f_s,grad_inf,seconds\n";
  }
  auto on_iteration = [&](const FitRecord& r) {
    if (log) {
      *log << r.iteration.iteration << "," << fmt_g17(r.iteration.value) << ","
           << fmt_g17(r.data_fit) << "," << fmt_g17(r.fc) << "," << fmt_g17(r.fs) << ","
           << fmt_g17(r.iteration.grad_norm) << "," << r.seconds << "\n";
      log->flush();
    }
  };

  const auto init = initial_log_weights(grid, cfg.init, cfg.seed);
  const FitResult fit = fit_metric(spec, init, cfg.lbfgs, on_iteration);
  const EdgeWeights learned = EdgeWeights::from_log(grid, fit.log_weights);
  save_weights(o.out, learned);

  const auto status = to_string(fit.optimization.status);
  if (log) *log << "# status=" << status << "\n";

  nlohmann::json summary;
  summary["status"] = std::string(status);
  summary["iterations"] = fit.history.empty() ? 0 : fit.history.back().iteration.iteration;
  summary["initial_value"] = fit.history.front().iteration.value;
  summary["initial_data_fit"] = fit.history.front().data_fit;
  summary["final_value"] = fit.history.back().iteration.value;
  summary["final_data_fit"] = fit.history.back().data_fit;
  std::ofstream(fs::path(o.out) / "summary.json") << summary.dump(2) << "\n";

  out << "status: " << status << "\n"
      << "iterations: " << summary["iterations"] << "\n"
      << "data fit: " << fmt_g17(fit.history.front().data_fit) << " -> "
      << fmt_g17(fit.history.back().data_fit) << "\n";
  return kOk;
}

int cmd_interp(const Options& o, std::ostream& out) {
  const RunConfig cfg = read_config(o.config);
  const Tensor from = read_tensor(o.from);
  const Tensor to = read_tensor(o.to);
  if (from.dims != to.dims) {
    throw std::invalid_argument("--from and --to histograms have different shapes");
  }
  const GridSpec grid(from.dims);
  const EdgeWeights w = weights_for(o.weights, grid);
  const auto r0 = normalized(from.data);
  const auto r1 = normalized(to.data);
  if (o.steps < 2) throw std::invalid_argument("--steps must be at least 2");

  const DiffusionOperator op(w, cfg.epsilon, cfg.substeps);
  Sequence seq;
  seq.times = uniform_timestamps(static_cast<std::size_t>(o.steps));
  for (double t : seq.times) {
    seq.frames.push_back(normalized(interpolate(op, r0, r1, t, cfg.sinkhorn_iters).barycenter));
  }
  write_sequence(o.out, grid, seq);
  out << "wrote " << seq.size() << " frames to " << o.out << "\n";
  return kOk;
}

int cmd_transfer(const Options& o, std::ostream& out) {
  const RunConfig cfg = read_config(o.config);
  const RgbImage source = read_ppm(o.source_image);

  ColorHistogram target;
  if (!o.target_hist.empty()) {
    Tensor t = read_tensor(o.target_hist);
    target = ColorHistogram::from_tensor(t);
    target.mass = normalized(target.mass);
  } else if (!o.target_image.empty()) {
    target = image_to_histogram(read_ppm(o.target_image), static_cast<std::size_t>(cfg.n));
  } else {
    throw std::invalid_argument("transfer needs --target-hist or --target-image");
  }
  const ColorHistogram src_hist = image_to_histogram(source, target.bins);
  const GridSpec grid = target.grid();
  const EdgeWeights w = weights_for(o.weights, grid);
  const DiffusionOperator op(w, cfg.epsilon, cfg.substeps);

  ColorMap map = barycentric_map(op, src_hist.mass, target.mass, cfg.sinkhorn_iters);
  fill_undefined(map);
  if (!o.map_out.empty()) write_tensor(o.map_out, map.to_tensor());

  RgbImage result = apply_color_map(source, map);
  if (o.bilateral) result = bilateral_smooth(result, source, o.spatial_sigma, o.range_sigma);
  write_ppm(o.out, result);
  out << "wrote " << result.width << "x" << result.height << " image to " << o.out << "\n";
  return kOk;
}

int cmd_export(const Options& o, std::ostream& out) {
  const Tensor t = read_tensor(o.input);
  if (o.format == "pgm") {
    export_pgm(t, o.out);
  } else {
    export_csv(t, o.out);
  }
  out << "wrote " << o.out << "\n";
  return kOk;
}

int cmd_info(const Options& o, std::ostream& out) {
  const Tensor t = read_tensor(o.input);
  std::string dims;
  for (std::size_t a = 0; a < t.ndim(); ++a) {
    if (a) dims += "x";
    dims += std::to_string(t.dims[a]);
  }
  const auto [lo, hi] = std::minmax_element(t.data.begin(), t.data.end());
  out << "dims: " << dims << "\n"
      << "sum: " << fmt_g17(std::accumulate(t.data.begin(), t.data.end(), 0.0)) << "\n"
      << "min: " << fmt_g17(*lo) << "\n"
      << "max: " << fmt_g17(*hi) << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground metric learning with entropic displacement interpolation", "gml"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads for frame evaluation")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic metric and histogram sequences");
  gen->add_option("--config", o.config)->required();
  gen->add_option("--pattern", o.pattern)->required();
  gen->add_option("--out", o.out)->required();

  auto* learn = app.add_subcommand("learn", "Learn edge weights from histogram sequences");
  learn->add_option("--config", o.config)->required();
  learn->add_option("--sequence", o.sequences, "Sequence directory (repeatable)")->required();
  learn->add_option("--out", o.out)->required();
  learn->add_option("--log", o.log, "Per-iteration CSV log");

  auto* interp = app.add_subcommand("interp", "Displacement interpolation between two histograms");
  interp->add_option("--weights", o.weights, "Weights directory (default: Euclidean)");
  interp->add_option("--from", o.from)->required();
  interp->add_option("--to", o.to)->required();
  interp->add_option("--steps", o.steps);
  interp->add_option("--config", o.config)->required();
  interp->add_option("--out", o.out)->required();

  auto* transfer = app.add_subcommand("transfer", "Colour transfer by barycentric projection");
  transfer->add_option("--weights", o.weights, "Weights directory (default: Euclidean)");
  transfer->add_option("--source-image", o.source_image)->required();
  transfer->add_option("--target-hist", o.target_hist, "n x n x n GMLT histogram");
  transfer->add_option("--target-image", o.target_image, "PPM whose histogram is the target");
  transfer->add_option("--config", o.config)->required();
  transfer->add_option("--out", o.out)->required();
  transfer->add_flag("--bilateral", o.bilateral, "Joint bilateral post-filter");
  transfer->add_option("--spatial-sigma", o.spatial_sigma);
  transfer->add_option("--range-sigma", o.range_sigma);
  transfer->add_option("--map-out", o.map_out, "Write the colour map as a GMLT tensor");

  auto* exp = app.add_subcommand("export", "Convert a GMLT tensor to PGM or CSV");
  exp->add_option("--input", o.input)->required();
  exp->add_option("--format", o.format)->required()->check(CLI::IsMember({"pgm", "csv"}));
  exp->add_option("--out", o.out)->required();

  auto* info = app.add_subcommand("info", "Print tensor metadata");
  info->add_option("--input", o.input)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(o, out);
    if (*learn) return cmd_learn(o, out);
    if (*interp) return cmd_interp(o, out);
    if (*transfer) return cmd_transfer(o, out);
    if (*exp) return cmd_export(o, out);
    if (*info) return cmd_info(o, out);
  } catch (const TensorIoError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == TensorIoError::Kind::shape ? kUsage : kIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::logic_error& e) {
    // invalid_argument, out_of_range, domain_error, length_error
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace gml::cli
