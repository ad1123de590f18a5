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
#ifndef SSSM_OPS_H_
#define SSSM_OPS_H_

#include <cstddef>

#include "sssm/autodiff.h"

// Differentiable primitives. Binary operations require equal shapes; there
// is no implicit broadcasting (use repeat()). Scalars have shape [].
namespace sssm {

template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> div(Var<T> a, Var<T> b);
template <typename T> Var<T> neg(Var<T> x);
// Subgradient 0 at x == 0.
template <typename T> Var<T> abs(Var<T> x);
template <typename T> Var<T> exp(Var<T> x);
template <typename T> Var<T> relu(Var<T> x);
template <typename T> Var<T> scale(Var<T> x, double factor);
template <typename T> Var<T> add_scalar(Var<T> x, double offset);

template <typename T> Var<T> sum(Var<T> x);
template <typename T> Var<T> mean(Var<T> x);
// Reduce one axis away: [.., n, ..] -> [.., ..].
template <typename T> Var<T> sum_axis(Var<T> x, std::size_t axis);
template <typename T> Var<T> mean_axis(Var<T> x, std::size_t axis);

// Max-subtracted softmax along `axis`.
template <typename T> Var<T> softmax(Var<T> x, std::size_t axis);

template <typename T> Var<T> reshape(Var<T> x, Shape shape);
// Half-open range [begin, end) along `axis`.
template <typename T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t begin, std::size_t end);
// Tiles x `times` times along an existing axis.
template <typename T> Var<T> repeat(Var<T> x, std::size_t axis, std::size_t times);

// u runs along image columns (axis 1), v along rows (axis 0).
enum class SpatialAxis { kU, kV };

// Finite differences of an H x W or H x W x C field. Order 1 is the forward
// difference x[i+1] - x[i]; order 2 is x[i+1] - 2x[i] + x[i-1]. Positions
// without a full stencil are zero.
template <typename T>
Var<T> spatial_gradient(Var<T> x, int order, SpatialAxis axis);

// 3x3 box mean with edge replication on H x W or H x W x C.
template <typename T> Var<T> mean_pool3x3(Var<T> x);

}  // namespace sssm

#endif  // SSSM_OPS_H_
