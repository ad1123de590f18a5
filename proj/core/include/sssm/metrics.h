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
#ifndef SSSM_METRICS_H_
#define SSSM_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sssm/tensor.h"
#include "sssm/warp_loss.h"

namespace sssm {

// Ground-truth disparity [H, W] in pixels.
struct DisparityGT {
  Tensor<float> values;
  std::vector<std::uint8_t> valid;
  // Optional non-occluded mask; empty when absent.
  std::vector<std::uint8_t> noc;

  std::size_t height() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
  std::size_t valid_count() const;
};

enum class PixelSet { kAll, kNonOccluded };

// Percentage of evaluated pixels with |pred - gt| > threshold (and, when
// `relative`, also > 5% of gt). Throws EmptyEvaluation if no pixel
// qualifies.
double d1_error(const Tensor<float>& pred, const DisparityGT& gt,
                double threshold_px, bool relative,
                PixelSet pixels = PixelSet::kAll);

// Mean |pred - gt| over evaluated pixels.
double epe(const Tensor<float>& pred, const DisparityGT& gt,
           PixelSet pixels = PixelSet::kAll);

// Mean over both views of |I - reconstruction|, each view's mean taken over
// its interior columns (`border_margin` dropped on the occlusion side).
double warping_error(const StereoPair& pair, const Tensor<float>& d_left,
                     const Tensor<float>& d_right,
                     std::size_t border_margin = 0);

struct EvalReport {
  double d1_0_5 = 0;  // D1(0.5px), absolute
  double d1_1 = 0;    // D1(1.0px), absolute
  double d1_3 = 0;    // D1(3.0px), KITTI style with the 5% clause
  double epe = 0;
  double warp_error = -1;  // < 0 when not computed
  std::size_t valid_pixels = 0;
  std::size_t total_pixels = 0;

  static std::string csv_header();
  std::string csv_row() const;
  std::string to_text() const;
};

EvalReport evaluate(const Tensor<float>& pred, const DisparityGT& gt,
                    PixelSet pixels = PixelSet::kAll);

// Pixel-count-weighted mean of several reports.
EvalReport aggregate(const std::vector<EvalReport>& reports);

}  // namespace sssm

#endif  // SSSM_METRICS_H_
