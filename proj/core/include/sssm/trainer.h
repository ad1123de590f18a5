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
#ifndef SSSM_TRAINER_H_
#define SSSM_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sssm/net.h"
#include "sssm/warp_loss.h"

namespace sssm {

struct TrainConfig {
  double learning_rate = 1e-3;
  double learning_rate_late = 1e-4;
  int lr_drop_iteration = 5000;
  int crop_height = 256;
  int crop_width = 512;
  int max_iterations = 10000;
  double smoothness_scratch = 0.001;
  double smoothness_converged = 0.1;
  int smoothness_switch_iteration = 5000;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  // Loss border margin in columns; negative means "use the disparity range".
  int border_margin = -1;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 1;

  void validate() const;
  double lr_at(int iteration) const;
  double smoothness_at(int iteration) const;
};

// Per-parameter RMSProp accumulators:
//   acc <- decay * acc + (1 - decay) * g^2
//   p   <- p - lr * g / sqrt(acc + eps)
class RmsProp {
 public:
  RmsProp(double decay = 0.9, double epsilon = 1e-8)
      : decay_(decay), epsilon_(epsilon) {}

  void step(ParameterSet<float>& params, double lr);

  int iteration() const { return iteration_; }
  void set_iteration(int it) { iteration_ = it; }
  const std::map<std::string, Tensor<float>>& accumulators() const {
    return acc_;
  }

  // Stores accumulators as "rmsprop/<name>" records and the iteration as
  // "rmsprop/@iteration" so they fit in an SSSMW1 file.
  void export_state(ParameterSet<float>& out) const;
  void import_state(const ParameterSet<float>& in);

 private:
  double decay_;
  double epsilon_;
  int iteration_ = 0;
  std::map<std::string, Tensor<float>> acc_;
};

// Raised when a step produces NaN/Inf; report() holds whatever terms were
// computed before the failure.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, LossReport report)
      : std::runtime_error(what), report_(report) {}
  const LossReport& report() const { return report_; }

 private:
  LossReport report_;
};

struct StepResult {
  int iteration = 0;  // iteration index this step ran as
  double learning_rate = 0;
  LossReport loss;
  double warp_error = 0;  // of the pre-update prediction
  Tensor<float> d_left;
  Tensor<float> d_right;
};

// One forward, backward and RMSProp update on `crop`. The learning rate and
// w_s follow the schedule at opt.iteration(), which is then incremented.
StepResult train_step(NetworkWeights<float>& weights, const StereoPair& crop,
                      const TrainConfig& config, const LossWeights& loss_weights,
                      RmsProp& opt);

struct LogRow {
  int iteration;
  double lr;
  LossReport loss;
  double warp_error;
};

std::string loss_log_header();
std::string loss_log_row(const LogRow& row);
void write_loss_log(std::ostream& out, const std::vector<LogRow>& rows);

struct TrainResult {
  NetworkWeights<float> weights;
  RmsProp optimizer;
  std::vector<LogRow> log;
};

struct TrainHooks {
  // Called after every step with the step result.
  std::function<void(const StepResult&)> on_step;
  // Directory for periodic "checkpoint_<iter>.sssmw" files.
  std::filesystem::path checkpoint_dir;
};

// Random crop of `pair` with the top-left corner drawn from `rng_seed`.
StereoPair random_crop(const StereoPair& pair, std::size_t height,
                       std::size_t width, std::uint64_t rng_seed);

// The pair index and crop for `iteration` depend only on (seed, iteration),
// so a resumed run replays the same stream.
struct Draw {
  std::size_t pair_index;
  StereoPair crop;
};
Draw draw_training_crop(const std::vector<StereoPair>& dataset,
                        const TrainConfig& config, int iteration);

// Seeded random init, then train_step over random crops of random pairs
// until config.max_iterations. No augmentation.
TrainResult train_from_scratch(const std::vector<StereoPair>& dataset,
                               const NetConfig& net, const TrainConfig& config,
                               const LossWeights& loss_weights,
                               const TrainHooks& hooks = {});

// Continues training from an existing state (weights + optimizer) up to
// config.max_iterations total.
void continue_training(TrainResult& state, const std::vector<StereoPair>& dataset,
                       const TrainConfig& config, const LossWeights& loss_weights,
                       const TrainHooks& hooks = {});

struct Prediction {
  Tensor<float> d_left;
  Tensor<float> d_right;
};

// Frozen forward pass. Images are edge-padded to multiples of the network
// alignment and the disparities cropped back.
Prediction infer(const NetworkWeights<float>& weights, const StereoPair& pair);

struct AdaptResult {
  Prediction prediction;  // made before the update from this pair
  LossReport loss;
  double warp_error = 0;
};

// Predict-then-update over a stream; weights and optimizer persist across
// pairs. Each pair must have dimensions divisible by the network alignment.
// Every step uses config.learning_rate_late and config.smoothness_converged,
// the settings for an already converged model.
std::vector<AdaptResult> online_adapt(NetworkWeights<float>& weights,
                                      RmsProp& opt,
                                      const std::vector<StereoPair>& stream,
                                      const TrainConfig& config,
                                      const LossWeights& loss_weights,
                                      const std::function<void(std::size_t,
                                                               const AdaptResult&)>&
                                          on_pair = {});

std::size_t effective_margin(const TrainConfig& config, const NetConfig& net);

}  // namespace sssm

#endif  // SSSM_TRAINER_H_
