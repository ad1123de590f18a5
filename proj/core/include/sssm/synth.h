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
#ifndef SSSM_SYNTH_H_
#define SSSM_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sssm/metrics.h"
#include "sssm/warp_loss.h"

namespace sssm {

enum class DisparityPattern { kConstant, kPiecewisePlanar };

// Describes a family of synthetic scenes.
struct SynthSpec {
  DisparityPattern pattern = DisparityPattern::kConstant;
  // Constant pattern: the shift in pixels. Must be < W/4.
  double disparity = 4.0;
  // Piecewise-planar pattern: per-band planes with disparities drawn inside
  // [min_disparity, max_disparity].
  double min_disparity = 2.0;
  double max_disparity = 10.0;
  int bands = 3;
  // Blur sigmas of the texture octaves are base_sigma * {1, 2, 4, 8}.
  double base_sigma = 1.5;
  // Amplitude ratio between successive octaves (coarser octaves get
  // octave_gain^k of the finest one's weight).
  double octave_gain = 1.6;
};

struct SynthSample {
  StereoPair pair;
  DisparityGT gt_left;
  DisparityGT gt_right;
};

// The right image is band-limited noise; the left image resamples it so that
// I_L(u, v) = I_R(u - d_L(u, v), v). Pixels whose correspondence leaves the
// other image are marked invalid in the ground truth.
SynthSample synth_pair(std::uint64_t seed, std::size_t height,
                       std::size_t width, const SynthSpec& spec);

// `count` pairs; constant-pattern disparities are drawn uniformly as integers
// in [min_disparity, max_disparity] when `integer_shift_range` is set.
std::vector<SynthSample> synth_dataset(std::uint64_t seed, std::size_t count,
                                       std::size_t height, std::size_t width,
                                       const SynthSpec& spec,
                                       bool integer_shift_range = true);

}  // namespace sssm

#endif  // SSSM_SYNTH_H_
