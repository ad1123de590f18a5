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
#ifndef SSSM_CONV_H_
#define SSSM_CONV_H_

#include <cstddef>

#include "sssm/autodiff.h"

namespace sssm {

enum class Padding { kSame, kValid };

// 2-D convolution (cross-correlation), channels last.
//   input  [H, W, Cin]
//   kernel [k, k, Cin, Cout], k odd
//   bias   [Cout]
// Same padding is zero padding of k/2 on each side; the output is
// ceil(H/stride) x ceil(W/stride).
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride = 1,
              Padding padding = Padding::kSame);

// 3-D convolution with zero same-padding.
//   input  [H, W, D, Cin]
//   kernel [3, 3, 3, Cin, Cout]
//   bias   [Cout]
// stride is 1 or 2; with stride 2 every spatial extent must be even and the
// output is [H/2, W/2, D/2, Cout].
template <typename T>
Var<T> conv3d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride = 1);

// Stride-2 transposed 3-D convolution: the adjoint of conv3d(stride 2) with
// respect to its input, plus a bias.
//   input  [h, w, d, Cin]
//   kernel [3, 3, 3, Cout, Cin]  (laid out as the conv3d kernel it transposes)
//   bias   [Cout]
// Output is [2h, 2w, 2d, Cout].
template <typename T>
Var<T> deconv3d(Var<T> input, Var<T> kernel, Var<T> bias);

}  // namespace sssm

#endif  // SSSM_CONV_H_
