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
#ifndef SSSM_NET_H_
#define SSSM_NET_H_

#include <cstddef>
#include <cstdint>

#include "sssm/autodiff.h"

namespace sssm {

struct NetConfig {
  int feature_layers = 18;
  int feature_dim = 64;       // F
  int kernel = 3;             // feature extractor kernel size
  int skip_every = 3;
  int disparity_range = 160;  // D; candidates are 0..D
  // Number of stride-2 stages in the 3-D matching module. 4 reaches 1/16
  // scale. 0 degenerates to a single stride-1 3-D projection.
  int restdm_scales = 4;

  // F=16, D=16, 2 scales, 6 extractor layers.
  static NetConfig toy();

  // Throws InvalidArgument on inconsistent values.
  void validate() const;

  // Spatial extents and the disparity axis must be multiples of this.
  std::size_t alignment() const { return std::size_t{1} << restdm_scales; }

  // D + 1 rounded up to alignment(). The extra levels are computed and
  // discarded before the soft argmin.
  std::size_t volume_levels() const;
};

// All learnable parameters. The feature extractor and the matching module
// exist once and are shared by both views and both volume directions.
//
// Names:
//   feature.conv{i}.{weight,bias}            i in [0, feature_layers)
//   restdm.down{i}.{weight,bias}             C_i, i in [1, scales]
//   restdm.res{i}.{a,b}.{weight,bias}        R_i
//   restdm.up{i}.{weight,bias}               DC_i; up1 emits one channel
//   restdm.project.{weight,bias}             only when scales == 0
template <typename T>
struct NetworkWeights {
  NetConfig config;
  ParameterSet<T> params;

  template <typename U>
  NetworkWeights<U> cast() const {
    return NetworkWeights<U>{config, params.template cast<U>()};
  }
};

// He-uniform kernels, zero biases, drawn from a seeded mt19937_64.
NetworkWeights<float> init_weights(const NetConfig& config, std::uint64_t seed);

// image [H, W, 3] in [0, 1] -> features [H, W, F]. Intensities are shifted
// by -0.5 before the first convolution.
template <typename T>
Var<T> extract_features(NetworkWeights<T>& weights, Var<T> image);

enum class VolumeDirection { kLeftToRight, kRightToLeft };

// Cross feature volume [H, W, D+1, 2F].
//   left-to-right: (u,v,d) = f_L(u,v) ++ f_R(u-d,v)
//   right-to-left: (u,v,d) = f_R(u,v) ++ f_L(u+d,v)
// Samples outside the image are zero. Requires D < W.
template <typename T>
Var<T> build_feature_volume(Var<T> f_left, Var<T> f_right,
                            std::size_t max_disparity,
                            VolumeDirection direction);

// [H, W, L, 2F] -> matching costs [H, W, L]. H, W and L must be multiples
// of config.alignment().
template <typename T>
Var<T> res_tdm(NetworkWeights<T>& weights, Var<T> volume);

// costs [H, W, D+1] -> disparity [H, W], sum_d d * softmax(-c)_d.
template <typename T>
Var<T> soft_argmin(Var<T> costs);

template <typename T>
struct DisparityPair {
  Var<T> left;
  Var<T> right;
};

// d_L = f(I_L, I_R), d_R = f(I_R, I_L) for images [H, W, 3] whose H and W
// are multiples of config.alignment().
template <typename T>
DisparityPair<T> forward(NetworkWeights<T>& weights, Var<T> left,
                         Var<T> right);

}  // namespace sssm

#endif  // SSSM_NET_H_
