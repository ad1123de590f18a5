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
#include "sssm/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <utility>

#include "sssm/checkpoint.h"
#include "sssm/error.h"
#include "sssm/log.h"
#include "sssm/metrics.h"

namespace sssm {
namespace {

constexpr char kAccPrefix[] = "rmsprop/";
constexpr char kIterationRecord[] = "rmsprop/@iteration";

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the pair
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E5FULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor<float> edge_pad(const Tensor<float>& img, std::size_t h, std::size_t w) {
  const std::size_t ih = img.dim(0), iw = img.dim(1), c = img.dim(2);
  Tensor<float> out({h, w, c});
  for (std::size_t v = 0; v < h; ++v) {
    const std::size_t sv = std::min(v, ih - 1);
    for (std::size_t u = 0; u < w; ++u) {
      const std::size_t su = std::min(u, iw - 1);
      std::copy_n(img.ptr() + (sv * iw + su) * c, c, out.ptr() + (v * w + u) * c);
    }
  }
  return out;
}

Tensor<float> crop_field(const Tensor<float>& d, std::size_t h, std::size_t w) {
  const std::size_t dw = d.dim(1);
  Tensor<float> out({h, w});
  for (std::size_t v = 0; v < h; ++v) {
    std::copy_n(d.ptr() + v * dw, w, out.ptr() + v * w);
  }
  return out;
}

void save_state(const TrainResult& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[64];
  std::snprintf(name, sizeof(name), "checkpoint_%06d.sssmw",
                state.optimizer.iteration());
  save_checkpoint(state.weights.params, dir / name);
  ParameterSet<float> opt;
  state.optimizer.export_state(opt);
  std::snprintf(name, sizeof(name), "optimizer_%06d.sssmw",
                state.optimizer.iteration());
  save_checkpoint(opt, dir / name);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !(learning_rate_late >= 0)) {
    throw InvalidArgument("learning rates must be >= 0");
  }
  if (crop_height <= 0 || crop_width <= 0) {
    throw InvalidArgument("crop size must be positive");
  }
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
  if (!(rmsprop_decay >= 0 && rmsprop_decay < 1)) {
    throw InvalidArgument("rmsprop_decay must lie in [0, 1)");
  }
  if (!(rmsprop_epsilon > 0)) throw InvalidArgument("rmsprop_epsilon must be > 0");
  if (!(smoothness_scratch >= 0) || !(smoothness_converged >= 0)) {
    throw InvalidArgument("smoothness weights must be >= 0");
  }
  if (checkpoint_every < 0) throw InvalidArgument("checkpoint_every must be >= 0");
  if (smoothness_switch_iteration > max_iterations) {
    throw InvalidArgument("smoothness_switch_iteration (" +
                          std::to_string(smoothness_switch_iteration) +
                          ") exceeds max_iterations (" +
                          std::to_string(max_iterations) + ")");
  }
}

double TrainConfig::lr_at(int iteration) const {
  return iteration < lr_drop_iteration ? learning_rate : learning_rate_late;
}

double TrainConfig::smoothness_at(int iteration) const {
  return iteration < smoothness_switch_iteration ? smoothness_scratch
                                                 : smoothness_converged;
}

void RmsProp::step(ParameterSet<float>& params, double lr) {
  for (Parameter<float>& p : params) {
    auto it = acc_.find(p.name);
    if (it == acc_.end()) {
      it = acc_.emplace(p.name, Tensor<float>(p.value.shape(), 0.0f)).first;
    } else if (it->second.shape() != p.value.shape()) {
      throw InvalidArgument("optimizer state for " + p.name + " has shape " +
                            to_string(it->second.shape()) + ", parameter has " +
                            to_string(p.value.shape()));
    }
    Tensor<float>& acc = it->second;
    const std::size_t n = p.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = p.grad.empty() ? 0.0 : static_cast<double>(p.grad[i]);
      const double a = decay_ * acc[i] + (1.0 - decay_) * g * g;
      acc[i] = static_cast<float>(a);
      p.value[i] = static_cast<float>(p.value[i] - lr * g / std::sqrt(a + epsilon_));
    }
  }
  ++iteration_;
}

void RmsProp::export_state(ParameterSet<float>& out) const {
  for (const auto& [name, acc] : acc_) {
    out.add(std::string(kAccPrefix) + name, acc);
  }
  out.add(kIterationRecord,
          Tensor<float>(Shape{1}, static_cast<float>(iteration_)));
}

void RmsProp::import_state(const ParameterSet<float>& in) {
  const std::string prefix = kAccPrefix;
  std::map<std::string, Tensor<float>> acc;
  int iteration = 0;
  bool have_iteration = false;
  for (const Parameter<float>& p : in) {
    if (p.name == kIterationRecord) {
      if (p.value.size() != 1) throw InvalidArgument("bad optimizer iteration record");
      iteration = static_cast<int>(p.value[0]);
      have_iteration = true;
    } else if (p.name.rfind(prefix, 0) == 0) {
      acc.emplace(p.name.substr(prefix.size()), p.value);
    } else {
      throw InvalidArgument("unexpected record in optimizer state: " + p.name);
    }
  }
  if (!have_iteration) throw InvalidArgument("optimizer state lacks an iteration");
  acc_ = std::move(acc);
  iteration_ = iteration;
}

std::size_t effective_margin(const TrainConfig& config, const NetConfig& net) {
  return config.border_margin < 0 ? static_cast<std::size_t>(net.disparity_range)
                                  : static_cast<std::size_t>(config.border_margin);
}

StepResult train_step(NetworkWeights<float>& weights, const StereoPair& crop,
                      const TrainConfig& config, const LossWeights& loss_weights,
                      RmsProp& opt) {
  StepResult r;
  r.iteration = opt.iteration();
  r.learning_rate = config.lr_at(r.iteration);
  LossWeights lw = loss_weights;
  lw.smoothness = config.smoothness_at(r.iteration);
  const std::size_t margin = effective_margin(config, weights.config);

  weights.params.zero_grad();
  Tape<float> tape;
  try {
    Var<float> l = tape.constant(crop.left);
    Var<float> rt = tape.constant(crop.right);
    DisparityPair<float> d = forward(weights, l, rt);
    LossTerms<float> terms = total_loss(l, rt, d.left, d.right, lw,
                                        LossOptions{margin});
    r.loss = terms.report();
    r.d_left = d.left.value();
    r.d_right = d.right.value();
    tape.backward(terms.total);
  } catch (const LossTermError& e) {
    throw TrainingDiverged(
        "iteration " + std::to_string(r.iteration) + ": " + e.what(),
        e.partial());
  } catch (const NonFiniteError& e) {
    throw TrainingDiverged(
        "iteration " + std::to_string(r.iteration) + ": " + e.what(), r.loss);
  }
  for (const Parameter<float>& p : weights.params) {
    if (!p.grad.all_finite()) {
      throw TrainingDiverged("iteration " + std::to_string(r.iteration) +
                                 ": non-finite gradient for " + p.name,
                             r.loss);
    }
  }
  opt.step(weights.params, r.learning_rate);
  r.warp_error = warping_error(crop, r.d_left, r.d_right, margin);
  return r;
}

std::string loss_log_header() {
  return "iteration,lr,total,unary_l,unary_r,smooth_l,smooth_r,loop_l,loop_r,"
         "mdh_l,mdh_r,warp_error";
}

std::string loss_log_row(const LogRow& row) {
  const LossReport& l = row.loss;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                row.iteration, row.lr, l.total, l.unary_l, l.unary_r,
                l.smooth_l, l.smooth_r, l.loop_l, l.loop_r, l.mdh_l, l.mdh_r,
                row.warp_error);
  return buf;
}

void write_loss_log(std::ostream& out, const std::vector<LogRow>& rows) {
  out << loss_log_header() << '\n';
  for (const LogRow& r : rows) out << loss_log_row(r) << '\n';
}

StereoPair random_crop(const StereoPair& pair, std::size_t height,
                       std::size_t width, std::uint64_t rng_seed) {
  const std::size_t h = pair.height(), w = pair.width();
  if (height > h || width > w) {
    throw InvalidArgument("crop " + std::to_string(height) + "x" +
                          std::to_string(width) + " exceeds image " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  std::mt19937_64 rng(rng_seed);
  const std::size_t top = rng() % (h - height + 1);
  const std::size_t left = rng() % (w - width + 1);
  auto cut = [&](const Tensor<float>& img) {
    const std::size_t c = img.dim(2);
    Tensor<float> out({height, width, c});
    for (std::size_t v = 0; v < height; ++v) {
      std::copy_n(img.ptr() + ((top + v) * w + left) * c, width * c,
                  out.ptr() + v * width * c);
    }
    return out;
  };
  return StereoPair{cut(pair.left), cut(pair.right)};
}

Draw draw_training_crop(const std::vector<StereoPair>& dataset,
                        const TrainConfig& config, int iteration) {
  if (dataset.empty()) throw InvalidArgument("training set is empty");
  std::mt19937_64 rng(mix(config.seed, static_cast<std::uint64_t>(iteration)));
  const std::size_t index = rng() % dataset.size();
  const std::uint64_t crop_seed = rng();
  return Draw{index, random_crop(dataset[index],
                                 static_cast<std::size_t>(config.crop_height),
                                 static_cast<std::size_t>(config.crop_width),
                                 crop_seed)};
}

void continue_training(TrainResult& state, const std::vector<StereoPair>& dataset,
                       const TrainConfig& config, const LossWeights& loss_weights,
                       const TrainHooks& hooks) {
  config.validate();
  loss_weights.validate();
  const std::size_t align = state.weights.config.alignment();
  if (config.crop_height % align != 0 || config.crop_width % align != 0) {
    throw InvalidArgument("crop size must be a multiple of " +
                          std::to_string(align));
  }
  for (const StereoPair& p : dataset) p.validate();
  while (state.optimizer.iteration() < config.max_iterations) {
    const int it = state.optimizer.iteration();
    Draw draw = draw_training_crop(dataset, config, it);
    StepResult r = train_step(state.weights, draw.crop, config, loss_weights,
                              state.optimizer);
    state.log.push_back(LogRow{r.iteration, r.learning_rate, r.loss, r.warp_error});
    log_debug("iter " + std::to_string(r.iteration) + " " + r.loss.to_string());
    if (hooks.on_step) hooks.on_step(r);
    if (config.checkpoint_every > 0 && !hooks.checkpoint_dir.empty() &&
        state.optimizer.iteration() % config.checkpoint_every == 0) {
      save_state(state, hooks.checkpoint_dir);
    }
  }
}

TrainResult train_from_scratch(const std::vector<StereoPair>& dataset,
                               const NetConfig& net, const TrainConfig& config,
                               const LossWeights& loss_weights,
                               const TrainHooks& hooks) {
  TrainResult state{init_weights(net, config.seed),
                    RmsProp(config.rmsprop_decay, config.rmsprop_epsilon),
                    {}};
  continue_training(state, dataset, config, loss_weights, hooks);
  return state;
}

Prediction infer(const NetworkWeights<float>& weights, const StereoPair& pair) {
  pair.validate();
  const std::size_t align = weights.config.alignment();
  const std::size_t h = pair.height(), w = pair.width();
  const std::size_t ph = (h + align - 1) / align * align;
  const std::size_t pw = (w + align - 1) / align * align;
  NetworkWeights<float> frozen = weights;
  Tape<float> tape;
  Var<float> l = tape.constant(ph == h && pw == w ? pair.left
                                                  : edge_pad(pair.left, ph, pw));
  Var<float> r = tape.constant(ph == h && pw == w ? pair.right
                                                  : edge_pad(pair.right, ph, pw));
  DisparityPair<float> d = forward(frozen, l, r);
  if (ph == h && pw == w) return Prediction{d.left.value(), d.right.value()};
  return Prediction{crop_field(d.left.value(), h, w),
                    crop_field(d.right.value(), h, w)};
}

std::vector<AdaptResult> online_adapt(
    NetworkWeights<float>& weights, RmsProp& opt,
    const std::vector<StereoPair>& stream, const TrainConfig& config,
    const LossWeights& loss_weights,
    const std::function<void(std::size_t, const AdaptResult&)>& on_pair) {
  config.validate();
  loss_weights.validate();
  // The model is treated as converged: post-drop rate and post-switch w_s.
  TrainConfig converged = config;
  converged.learning_rate = config.learning_rate_late;
  converged.smoothness_scratch = config.smoothness_converged;
  const std::size_t align = weights.config.alignment();
  std::vector<AdaptResult> out;
  out.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const StereoPair& pair = stream[i];
    pair.validate();
    if (pair.height() % align != 0 || pair.width() % align != 0) {
      throw InvalidArgument("adaptation pair " + std::to_string(i) +
                            " is not a multiple of " + std::to_string(align));
    }
    StepResult r = train_step(weights, pair, converged, loss_weights, opt);
    AdaptResult a{Prediction{std::move(r.d_left), std::move(r.d_right)}, r.loss,
                  r.warp_error};
    if (on_pair) on_pair(i, a);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace sssm
