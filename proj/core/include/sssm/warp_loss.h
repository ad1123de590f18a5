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
#ifndef SSSM_WARP_LOSS_H_
#define SSSM_WARP_LOSS_H_

#include <cstddef>
#include <string>

#include "sssm/autodiff.h"
#include "sssm/error.h"

namespace sssm {

// Rectified pair, each [H, W, 3] with intensities in [0, 1].
struct StereoPair {
  Tensor<float> left;
  Tensor<float> right;

  std::size_t height() const { return left.dim(0); }
  std::size_t width() const { return left.dim(1); }
  // Throws InvalidArgument on mismatched shapes or out-of-range values.
  void validate() const;
};

enum class WarpDirection {
  kToLeft,   // samples source at (u - d, v)
  kToRight,  // samples source at (u + d, v)
};

// Horizontal linear resampling of source [H, W, C] (or [H, W]) by a
// disparity field [H, W]. Sample positions are clamped to [0, W-1];
// clamped samples carry no disparity gradient. Negative disparities throw.
template <typename T>
Var<T> warp(Var<T> source, Var<T> disparity, WarpDirection direction);

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Per-pixel SSIM from 3x3 box statistics (edge-replicated).
template <typename T>
Var<T> ssim(Var<T> x, Var<T> y);

struct LossWeights {
  double photometric = 1.0;   // w_p
  double smoothness = 0.001;  // w_s
  double consistency = 1.0;   // w_c
  double mdh = 0.001;         // w_m
  double ssim = 0.80;         // lambda_1
  double l1 = 0.15;           // lambda_2
  double gradient = 0.15;     // lambda_3

  void validate() const;
};

// Half-open column range [begin, end) over which a loss mean is taken.
// end == 0 means "to the last column".
struct ColumnWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// mean of l1 (1 - SSIM)/2 + l2 |I - I'| + l3 (|d_u I - d_u I'| + |d_v I - d_v I'|)
template <typename T>
Var<T> unary_loss(Var<T> image, Var<T> reconstruction,
                  const LossWeights& weights = {}, ColumnWindow window = {});

// mean of |d_uu d| exp(-|d_uu g|) + |d_vv d| exp(-|d_vv g|), g the
// channel-mean of `image`. The image is treated as data.
template <typename T>
Var<T> smoothness_loss(Var<T> disparity, Var<T> image);

enum class Side { kLeft, kRight };

// Left: I''_L = warp(warp(I_L, d_R, to_right), d_L, to_left), mean |I_L - I''_L|.
// Right mirrors it.
template <typename T>
Var<T> loop_consistency_loss(Var<T> left, Var<T> right, Var<T> d_left,
                             Var<T> d_right, Side side,
                             ColumnWindow window = {});

// mean |d|
template <typename T>
Var<T> mdh_loss(Var<T> disparity);

struct LossReport {
  double total = 0;
  double unary_l = 0, unary_r = 0;
  double smooth_l = 0, smooth_r = 0;
  double loop_l = 0, loop_r = 0;
  double mdh_l = 0, mdh_r = 0;

  // Weighted sum of the parts.
  double weighted_sum(const LossWeights& w) const;
  std::string to_string() const;
};

// A loss term evaluated to NaN/Inf. partial() holds the terms that were
// computed before it.
class LossTermError : public NonFiniteError {
 public:
  LossTermError(std::string term, LossReport partial, const std::string& detail)
      : NonFiniteError("loss term " + term + " is not finite (" + detail +
                       "); terms so far: " + partial.to_string()),
        term_(std::move(term)),
        partial_(partial) {}
  const std::string& term() const { return term_; }
  const LossReport& partial() const { return partial_; }

 private:
  std::string term_;
  LossReport partial_;
};

struct LossOptions {
  // Columns excluded from the photometric and loop terms on each view's
  // occlusion side (left border for the left view, right border for the
  // right view).
  std::size_t border_margin = 0;
};

template <typename T>
struct LossTerms {
  Var<T> total;
  Var<T> unary_l, unary_r;
  Var<T> smooth_l, smooth_r;
  Var<T> loop_l, loop_r;
  Var<T> mdh_l, mdh_r;

  LossReport report() const;
};

// Assembles the eight weighted terms from I'_L = warp(I_R, d_L, to_left)
// and I'_R = warp(I_L, d_R, to_right). A NaN/Inf inside any term is
// rethrown as LossTermError naming that term.
template <typename T>
LossTerms<T> total_loss(Var<T> left, Var<T> right, Var<T> d_left,
                        Var<T> d_right, const LossWeights& weights,
                        const LossOptions& options = {});

// Column windows that drop `margin` columns on each view's occlusion side.
ColumnWindow left_window(std::size_t width, std::size_t margin);
ColumnWindow right_window(std::size_t width, std::size_t margin);

}  // namespace sssm

#endif  // SSSM_WARP_LOSS_H_
