/* Copyright 2026 The SSSM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "sssm/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sssm/checkpoint.h"
#include "sssm/config.h"
#include "sssm/error.h"
#include "sssm/gradcheck.h"
#include "sssm/image_io.h"
#include "sssm/log.h"
#include "sssm/manifest.h"
#include "sssm/metrics.h"
#include "sssm/parallel.h"
#include "sssm/synth.h"
#include "sssm/trainer.h"

namespace sssm {
namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::string manifest;
  std::string checkpoint;
  std::string out;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  bool single_thread = false;
  bool toy = false;
};

RunConfig resolve_config(const GlobalFlags& g) {
  RunConfig c;
  if (g.toy) c.apply_toy();
  if (!g.config.empty()) c = load_run_config(g.config, c);
  if (!g.manifest.empty()) c.manifest = g.manifest;
  if (!g.checkpoint.empty()) c.checkpoint = g.checkpoint;
  if (!g.out.empty()) c.out = g.out;
  if (g.iterations) {
    c.train.max_iterations = *g.iterations;
    // A switch past the last iteration never fires; clamping it changes
    // nothing and keeps the config valid.
    c.train.smoothness_switch_iteration =
        std::min(c.train.smoothness_switch_iteration, *g.iterations);
  }
  if (g.seed) c.seed = *g.seed;
  c.train.seed = c.seed;
  c.validate();
  return c;
}

fs::path require(const fs::path& p, const char* flag) {
  if (p.empty()) throw InvalidArgument(std::string(flag) + " is required");
  return p;
}

fs::path optimizer_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p += ".opt";
  return p;
}

std::string indexed(std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%06zu_%s", i, suffix);
  return buf;
}

// Loads weights and their network description ("<checkpoint>.cfg", else
// the run config's network).
NetworkWeights<float> load_model(const RunConfig& c) {
  const fs::path ckpt = require(c.checkpoint, "--checkpoint");
  ParameterSet<float> loaded = load_checkpoint(ckpt);
  NetConfig net = c.net;
  const fs::path cfg = net_config_path(ckpt);
  if (fs::exists(cfg)) net = parse_net_config(read_file(cfg));
  NetworkWeights<float> w = init_weights(net, 0);
  assign_parameters(w.params, loaded);
  return w;
}

void save_model(const NetworkWeights<float>& w, const fs::path& path) {
  save_checkpoint(w.params, path);
  write_file(net_config_path(path), format_net_config(w.config));
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const fs::path dir = require(c.out, "--out");
  const DatasetManifest m = load_manifest(require(c.manifest, "--manifest"));
  const std::vector<StereoPair> pairs = load_pairs(m);
  fs::create_directories(dir);
  write_file(dir / "run.cfg", format_run_config(c));

  TrainResult state{init_weights(c.net, c.seed),
                    RmsProp(c.train.rmsprop_decay, c.train.rmsprop_epsilon),
                    {}};
  if (!c.checkpoint.empty()) {
    state.weights = load_model(c);
    const fs::path opt = optimizer_path(c.checkpoint);
    if (fs::exists(opt)) state.optimizer.import_state(load_checkpoint(opt));
    log_info("resuming from " + c.checkpoint.string() + " at iteration " +
             std::to_string(state.optimizer.iteration()));
  }
  TrainHooks hooks;
  hooks.checkpoint_dir = dir / "checkpoints";
  const int report_every = std::max(1, c.train.max_iterations / 20);
  hooks.on_step = [report_every](const StepResult& r) {
    if ((r.iteration + 1) % report_every == 0) {
      log_info("iteration " + std::to_string(r.iteration + 1) + " loss " +
               std::to_string(r.loss.total) + " warp " +
               std::to_string(r.warp_error));
    }
  };
  continue_training(state, pairs, c.train, c.loss, hooks);

  const fs::path model = dir / "model.sssmw";
  save_model(state.weights, model);
  ParameterSet<float> opt;
  state.optimizer.export_state(opt);
  save_checkpoint(opt, optimizer_path(model));
  std::ofstream log(dir / "loss_log.csv", std::ios::binary);
  write_loss_log(log, state.log);
  if (!log) throw IoError("cannot write " + (dir / "loss_log.csv").string());
  out << "trained " << state.optimizer.iteration() << " iterations -> "
      << model.string() << '\n';
  return 0;
}

int cmd_adapt(const RunConfig& c, std::ostream& out) {
  NetworkWeights<float> w = load_model(c);
  const fs::path dir = require(c.out, "--out");
  const DatasetManifest m = load_manifest(require(c.manifest, "--manifest"));
  fs::create_directories(dir);
  RmsProp opt(c.train.rmsprop_decay, c.train.rmsprop_epsilon);
  std::ofstream csv(dir / "adapt.csv", std::ios::binary);
  csv << loss_log_header() << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::vector<StereoPair> one{load_pair(m.records[i])};
    const int it = opt.iteration();
    online_adapt(w, opt, one, c.train, c.loss,
                 [&](std::size_t, const AdaptResult& a) {
                   write_disparity_pfm(a.prediction.d_left,
                                       dir / indexed(i, "left.pfm"));
                   write_disparity_pfm(a.prediction.d_right,
                                       dir / indexed(i, "right.pfm"));
                   csv << loss_log_row(LogRow{it, c.train.learning_rate_late, a.loss,
                                              a.warp_error})
                       << '\n';
                 });
  }
  if (!csv) throw IoError("cannot write " + (dir / "adapt.csv").string());
  save_model(w, dir / "adapted.sssmw");
  out << "adapted on " << m.size() << " pairs -> " << dir.string() << '\n';
  return 0;
}

int cmd_infer(const RunConfig& c, const std::vector<std::string>& files,
              std::ostream& out) {
  const NetworkWeights<float> w = load_model(c);
  const fs::path dir = require(c.out, "--out");
  std::vector<ManifestRecord> records;
  if (!files.empty()) {
    if (files.size() != 2) throw InvalidArgument("infer takes LEFT RIGHT");
    records.push_back({files[0], files[1], {}, {}});
  } else {
    records = load_manifest(require(c.manifest, "--manifest")).records;
  }
  fs::create_directories(dir);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Prediction p = infer(w, load_pair(records[i]));
    write_disparity_pfm(p.d_left, dir / indexed(i, "left.pfm"));
    write_disparity_pfm(p.d_right, dir / indexed(i, "right.pfm"));
  }
  out << "wrote " << records.size() << " disparity pairs to " << dir.string()
      << '\n';
  return 0;
}

int cmd_eval(const RunConfig& c, const std::string& pred_dir, bool noc,
             std::ostream& out) {
  const DatasetManifest m = load_manifest(require(c.manifest, "--manifest"));
  std::optional<NetworkWeights<float>> w;
  if (pred_dir.empty()) w = load_model(c);
  std::vector<EvalReport> reports;
  const std::size_t margin = effective_margin(c.train, w ? w->config : c.net);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const ManifestRecord& r = m.records[i];
    if (!r.gt) continue;
    const StereoPair pair = load_pair(r);
    Prediction p;
    if (w) {
      p = infer(*w, pair);
    } else {
      p.d_left = read_disparity_pfm(fs::path(pred_dir) / indexed(i, "left.pfm"));
      const fs::path right = fs::path(pred_dir) / indexed(i, "right.pfm");
      if (fs::exists(right)) p.d_right = read_disparity_pfm(right);
    }
    EvalReport rep = evaluate(p.d_left, load_gt(r),
                              noc ? PixelSet::kNonOccluded : PixelSet::kAll);
    if (!p.d_right.empty()) {
      rep.warp_error = warping_error(pair, p.d_left, p.d_right, margin);
    }
    reports.push_back(rep);
  }
  if (reports.empty()) {
    throw EmptyEvaluation("no manifest record has ground truth");
  }
  const EvalReport total = aggregate(reports);
  out << total.to_text();
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::string csv = EvalReport::csv_header() + "\n";
    for (const EvalReport& r : reports) csv += r.csv_row() + "\n";
    write_file(c.out / "eval.csv", csv);
  }
  return 0;
}

struct SynthFlags {
  std::size_t count = 8;
  std::size_t height = 64;
  std::size_t width = 128;
  std::string pattern = "constant";
  double disparity = -1;
  double min_disparity = 2;
  double max_disparity = 10;
  double base_sigma = 1.5;
};

int cmd_synth(const RunConfig& c, const SynthFlags& f, std::ostream& out) {
  const fs::path dir = require(c.out, "--out");
  SynthSpec spec;
  spec.min_disparity = f.min_disparity;
  spec.max_disparity = f.max_disparity;
  spec.base_sigma = f.base_sigma;
  if (f.pattern == "constant") {
    spec.pattern = DisparityPattern::kConstant;
  } else if (f.pattern == "planar") {
    spec.pattern = DisparityPattern::kPiecewisePlanar;
  } else {
    throw InvalidArgument("unknown pattern '" + f.pattern + "'");
  }
  const bool integer_range = f.disparity < 0;
  if (!integer_range) spec.disparity = f.disparity;
  const std::vector<SynthSample> samples =
      synth_dataset(c.seed, f.count, f.height, f.width, spec, integer_range);
  fs::create_directories(dir);
  DatasetManifest m;
  m.root = dir;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SynthSample& s = samples[i];
    ManifestRecord r{dir / indexed(i, "left.ppm"), dir / indexed(i, "right.ppm"),
                     dir / indexed(i, "gt.pgm"), dir / indexed(i, "noc.pgm")};
    write_image(r.left, s.pair.left);
    write_image(r.right, s.pair.right);
    write_gt_disparity(*r.gt, s.gt_left);
    Tensor<float> mask({f.height, f.width});
    for (std::size_t k = 0; k < mask.size(); ++k) {
      mask[k] = s.gt_left.valid[k] ? 1.0f : 0.0f;
    }
    write_image(*r.mask, mask);
    m.records.push_back(std::move(r));
  }
  write_manifest(dir / "manifest.txt", m);
  out << "wrote " << samples.size() << " pairs to " << dir.string() << '\n';
  return 0;
}

int cmd_gradcheck(std::ostream& out) {
  bool ok = true;
  for (const GradCheckResult& r : run_gradcheck_suite()) {
    out << format_gradcheck(r) << '\n';
    ok = ok && r.passed;
  }
  out << (ok ? "gradcheck: all passed" : "gradcheck: FAILED") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Self-supervised stereo matching", "sssm"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "key = value run configuration");
  app.add_option("--manifest", g.manifest, "dataset manifest");
  app.add_option("--checkpoint", g.checkpoint, "weights file (SSSMW1)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--iterations", g.iterations, "training iterations");
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--single-thread", g.single_thread, "use one thread");
  app.add_flag("--toy", g.toy, "toy network preset (F=16, D=16, 2 scales, 64x128 crops)");

  auto* train = app.add_subcommand("train", "train from scratch (or resume)");
  auto* adapt = app.add_subcommand("adapt", "online adaptation over a manifest");
  auto* infer_cmd = app.add_subcommand("infer", "frozen prediction to PFM");
  std::vector<std::string> infer_files;
  infer_cmd->add_option("files", infer_files, "LEFT RIGHT images");
  auto* eval = app.add_subcommand("eval", "evaluate against ground truth");
  std::string pred_dir;
  bool noc = false;
  eval->add_option("--pred", pred_dir, "directory of predicted PFMs");
  eval->add_flag("--noc", noc, "non-occluded pixels only");
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  SynthFlags sf;
  synth->add_option("--count", sf.count, "number of pairs");
  synth->add_option("--height", sf.height, "image height");
  synth->add_option("--width", sf.width, "image width");
  synth->add_option("--pattern", sf.pattern, "constant | planar");
  synth->add_option("--disparity", sf.disparity,
                    "fixed constant shift (default: drawn from the range)");
  synth->add_option("--min-disparity", sf.min_disparity, "range minimum");
  synth->add_option("--max-disparity", sf.max_disparity, "range maximum");
  synth->add_option("--sigma", sf.base_sigma, "texture base blur sigma");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference suite");
  for (CLI::App* sub : {train, adapt, infer_cmd, eval, synth, gradcheck}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    set_log_level(log_level_from_env());
    if (g.single_thread) set_num_threads(1);
    if (gradcheck->parsed()) return cmd_gradcheck(out);
    const RunConfig c = resolve_config(g);
    if (train->parsed()) return cmd_train(c, out);
    if (adapt->parsed()) return cmd_adapt(c, out);
    if (infer_cmd->parsed()) return cmd_infer(c, infer_files, out);
    if (eval->parsed()) return cmd_eval(c, pred_dir, noc, out);
    if (synth->parsed()) return cmd_synth(c, sf, out);
  } catch (const std::exception& e) {
    err << "sssm: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sssm
