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
#ifndef SSSM_CONFIG_H_
#define SSSM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "sssm/net.h"
#include "sssm/trainer.h"
#include "sssm/warp_loss.h"

namespace sssm {

// Everything a run needs. Serialized as flat "key = value" lines with '#'
// comments; every key is optional and unknown keys are errors.
struct RunConfig {
  NetConfig net;
  TrainConfig train;
  LossWeights loss;
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  std::uint64_t seed = 1;

  // Applies the toy preset: toy NetConfig and a 64x128 crop.
  void apply_toy();
  void validate() const;
};

// Parses `text` on top of `base`. Throws ParseError (byte offset of the
// offending line) on syntax errors, unknown keys and bad values.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// All keys with their current values, one per line.
std::string format_run_config(const RunConfig& config);

// Network keys only: feature_layers, feature_dim, kernel, disparity_range,
// restdm_scales, skip_every.
std::string format_net_config(const NetConfig& net);
NetConfig parse_net_config(const std::string& text);

// "<checkpoint>.cfg": the network description stored next to a checkpoint.
std::filesystem::path net_config_path(const std::filesystem::path& checkpoint);

}  // namespace sssm

#endif  // SSSM_CONFIG_H_
