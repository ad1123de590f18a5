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
#include "sssm/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace sssm {
namespace {

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " +
                          to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// (outer, n, inner) factorisation of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw InvalidArgument(std::string(op) + ": axis " + std::to_string(axis) +
                          " out of range for shape " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Elementwise map with a derivative that depends on input and output.
template <typename T, typename F, typename DF>
Var<T> unary(const char* op, Var<T> x, F f, DF df) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return x.tape->record(op, std::move(out), {x},
                        [x, df](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          Tensor<T>* gx = tape.accumulator(x.id);
                          if (!gx) return;
                          const Tensor<T>& xv = tape.value(x);
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            (*gx)[i] += g[i] * df(xv[i]);
                          }
                        });
}

// H x W x C view of a rank-2 or rank-3 field.
struct Field {
  std::size_t h, w, c;
};

Field as_field(const Shape& s, const char* op) {
  if (s.size() == 2) return {s[0], s[1], 1};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  throw InvalidArgument(std::string(op) + ": expected HxW or HxWxC, got " +
                        to_string(s));
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape->record("add", std::move(out), {a, b},
                        [a, b](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          for (std::size_t id : {a.id, b.id}) {
                            if (Tensor<T>* gi = tape.accumulator(id)) {
                              for (std::size_t i = 0; i < g.size(); ++i)
                                (*gi)[i] += g[i];
                            }
                          }
                        });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.tape->record("sub", std::move(out), {a, b},
                        [a, b](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          if (Tensor<T>* ga = tape.accumulator(a.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*ga)[i] += g[i];
                          }
                          if (Tensor<T>* gb = tape.accumulator(b.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gb)[i] -= g[i];
                          }
                        });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape->record("mul", std::move(out), {a, b},
                        [a, b](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          const auto& av = tape.value(a);
                          const auto& bv = tape.value(b);
                          if (Tensor<T>* ga = tape.accumulator(a.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*ga)[i] += g[i] * bv[i];
                          }
                          if (Tensor<T>* gb = tape.accumulator(b.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gb)[i] += g[i] * av[i];
                          }
                        });
}

template <typename T>
Var<T> div(Var<T> a, Var<T> b) {
  require_same_shape("div", a, b);
  Tensor<T> out(a.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  return a.tape->record("div", std::move(out), {a, b},
                        [a, b](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          const auto& av = tape.value(a);
                          const auto& bv = tape.value(b);
                          if (Tensor<T>* ga = tape.accumulator(a.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*ga)[i] += g[i] / bv[i];
                          }
                          if (Tensor<T>* gb = tape.accumulator(b.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gb)[i] -= g[i] * av[i] / (bv[i] * bv[i]);
                          }
                        });
}

template <typename T>
Var<T> neg(Var<T> x) {
  return unary<T>("neg", x, [](T v) { return -v; }, [](T) { return T{-1}; });
}

template <typename T>
Var<T> abs(Var<T> x) {
  return unary<T>(
      "abs", x, [](T v) { return std::abs(v); },
      [](T v) { return v > 0 ? T{1} : (v < 0 ? T{-1} : T{0}); });
}

template <typename T>
Var<T> exp(Var<T> x) {
  return unary<T>(
      "exp", x, [](T v) { return std::exp(v); },
      [](T v) { return std::exp(v); });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return unary<T>(
      "relu", x, [](T v) { return v > 0 ? v : T{0}; },
      [](T v) { return v > 0 ? T{1} : T{0}; });
}

template <typename T>
Var<T> scale(Var<T> x, double factor) {
  const T f = static_cast<T>(factor);
  return unary<T>(
      "scale", x, [f](T v) { return v * f; }, [f](T) { return f; });
}

template <typename T>
Var<T> add_scalar(Var<T> x, double offset) {
  const T o = static_cast<T>(offset);
  return unary<T>(
      "add_scalar", x, [o](T v) { return v + o; }, [](T) { return T{1}; });
}

template <typename T>
Var<T> sum(Var<T> x) {
  const auto& xv = x.value();
  T total = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i];
  return x.tape->record("sum", Tensor<T>(Shape{}, total), {x},
                        [x](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          if (Tensor<T>* gx = tape.accumulator(x.id)) {
                            for (auto& v : gx->data()) v += g[0];
                          }
                        });
}

template <typename T>
Var<T> mean(Var<T> x) {
  if (x.size() == 0) throw InvalidArgument("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

template <typename T>
Var<T> sum_axis(Var<T> x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "sum_axis");
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> out(out_shape);
  const auto& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += xv[(o * s.n + k) * s.inner + i];
  return x.tape->record("sum_axis", std::move(out), {x},
                        [x, s](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          Tensor<T>* gx = tape.accumulator(x.id);
                          if (!gx) return;
                          for (std::size_t o = 0; o < s.outer; ++o)
                            for (std::size_t k = 0; k < s.n; ++k)
                              for (std::size_t i = 0; i < s.inner; ++i)
                                (*gx)[(o * s.n + k) * s.inner + i] +=
                                    g[o * s.inner + i];
                        });
}

template <typename T>
Var<T> mean_axis(Var<T> x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "mean_axis");
  return scale(sum_axis(x, axis), 1.0 / static_cast<double>(s.n));
}

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "softmax");
  const auto& xv = x.value();
  Tensor<T> out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      T mx = xv[base];
      for (std::size_t k = 1; k < s.n; ++k)
        mx = std::max(mx, xv[base + k * s.inner]);
      T z = 0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const T e = std::exp(xv[base + k * s.inner] - mx);
        out[base + k * s.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] /= z;
    }
  }
  return x.tape->record(
      "softmax", std::move(out), {x},
      [x, s](const Tensor<T>& p, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(x.id);
        if (!gx) return;
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.n * s.inner + i;
            T dot = 0;
            for (std::size_t k = 0; k < s.n; ++k)
              dot += g[base + k * s.inner] * p[base + k * s.inner];
            for (std::size_t k = 0; k < s.n; ++k) {
              const std::size_t j = base + k * s.inner;
              (*gx)[j] += p[j] * (g[j] - dot);
            }
          }
        }
      });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return x.tape->record("reshape", std::move(out), {x},
                        [x](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
                          if (Tensor<T>* gx = tape.accumulator(x.id)) {
                            for (std::size_t i = 0; i < g.size(); ++i)
                              (*gx)[i] += g[i];
                          }
                        });
}

template <typename T>
Var<T> slice(Var<T> x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_axis(x.shape(), axis, "slice");
  if (begin > end || end > s.n) {
    throw InvalidArgument("slice: range [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") outside axis of length " +
                          std::to_string(s.n));
  }
  const std::size_t m = end - begin;
  Shape out_shape = x.shape();
  out_shape[axis] = m;
  Tensor<T> out(out_shape);
  const auto& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < m; ++k)
      std::copy_n(xv.ptr() + (o * s.n + begin + k) * s.inner, s.inner,
                  out.ptr() + (o * m + k) * s.inner);
  return x.tape->record(
      "slice", std::move(out), {x},
      [x, s, begin, m](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(x.id);
        if (!gx) return;
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < s.inner; ++i)
              (*gx)[(o * s.n + begin + k) * s.inner + i] +=
                  g[(o * m + k) * s.inner + i];
      });
}

template <typename T>
Var<T> repeat(Var<T> x, std::size_t axis, std::size_t times) {
  const AxisSplit s = split_axis(x.shape(), axis, "repeat");
  if (times == 0) throw InvalidArgument("repeat: times must be positive");
  Shape out_shape = x.shape();
  out_shape[axis] = s.n * times;
  Tensor<T> out(out_shape);
  const auto& xv = x.value();
  const std::size_t block = s.n * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t t = 0; t < times; ++t)
      std::copy_n(xv.ptr() + o * block, block,
                  out.ptr() + (o * times + t) * block);
  return x.tape->record(
      "repeat", std::move(out), {x},
      [x, s, times, block](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(x.id);
        if (!gx) return;
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t t = 0; t < times; ++t)
            for (std::size_t i = 0; i < block; ++i)
              (*gx)[o * block + i] += g[(o * times + t) * block + i];
      });
}

template <typename T>
Var<T> spatial_gradient(Var<T> x, int order, SpatialAxis axis) {
  const Field f = as_field(x.shape(), "spatial_gradient");
  if (order != 1 && order != 2) {
    throw InvalidArgument("spatial_gradient: order must be 1 or 2");
  }
  const std::size_t n = axis == SpatialAxis::kU ? f.w : f.h;
  if (order == 2 && (f.h < 3 || f.w < 3)) {
    throw InvalidArgument("spatial_gradient: order 2 needs H, W >= 3");
  }
  // Element stride between neighbours along the chosen axis.
  const std::size_t step = axis == SpatialAxis::kU ? f.c : f.w * f.c;
  const auto& xv = x.value();
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < f.h; ++r)
    for (std::size_t col = 0; col < f.w; ++col) {
      const std::size_t i = axis == SpatialAxis::kU ? col : r;
      const std::size_t base = (r * f.w + col) * f.c;
      for (std::size_t ch = 0; ch < f.c; ++ch) {
        const std::size_t j = base + ch;
        if (order == 1) {
          if (i + 1 < n) out[j] = xv[j + step] - xv[j];
        } else if (i >= 1 && i + 1 < n) {
          out[j] = xv[j + step] - T{2} * xv[j] + xv[j - step];
        }
      }
    }
  return x.tape->record(
      "spatial_gradient", std::move(out), {x},
      [x, f, n, step, order, axis](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(x.id);
        if (!gx) return;
        for (std::size_t r = 0; r < f.h; ++r)
          for (std::size_t col = 0; col < f.w; ++col) {
            const std::size_t i = axis == SpatialAxis::kU ? col : r;
            const std::size_t base = (r * f.w + col) * f.c;
            for (std::size_t ch = 0; ch < f.c; ++ch) {
              const std::size_t j = base + ch;
              if (order == 1) {
                if (i + 1 < n) {
                  (*gx)[j + step] += g[j];
                  (*gx)[j] -= g[j];
                }
              } else if (i >= 1 && i + 1 < n) {
                (*gx)[j + step] += g[j];
                (*gx)[j] -= T{2} * g[j];
                (*gx)[j - step] += g[j];
              }
            }
          }
      });
}

template <typename T>
Var<T> mean_pool3x3(Var<T> x) {
  const Field f = as_field(x.shape(), "mean_pool3x3");
  if (f.h < 3 || f.w < 3) {
    throw InvalidArgument("mean_pool3x3: needs H, W >= 3, got " +
                          to_string(x.shape()));
  }
  const auto clamp_idx = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  const auto& xv = x.value();
  Tensor<T> out(x.shape());
  const T ninth = T{1} / T{9};
  for (std::size_t r = 0; r < f.h; ++r)
    for (std::size_t col = 0; col < f.w; ++col)
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const std::size_t rr = clamp_idx(static_cast<std::ptrdiff_t>(r) + dr, f.h);
          const std::size_t cc =
              clamp_idx(static_cast<std::ptrdiff_t>(col) + dc, f.w);
          const T* src = xv.ptr() + (rr * f.w + cc) * f.c;
          T* dst = out.ptr() + (r * f.w + col) * f.c;
          for (std::size_t ch = 0; ch < f.c; ++ch) dst[ch] += ninth * src[ch];
        }
  return x.tape->record(
      "mean_pool3x3", std::move(out), {x},
      [x, f, clamp_idx, ninth](const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(x.id);
        if (!gx) return;
        for (std::size_t r = 0; r < f.h; ++r)
          for (std::size_t col = 0; col < f.w; ++col)
            for (std::ptrdiff_t dr = -1; dr <= 1; ++dr)
              for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
                const std::size_t rr =
                    clamp_idx(static_cast<std::ptrdiff_t>(r) + dr, f.h);
                const std::size_t cc =
                    clamp_idx(static_cast<std::ptrdiff_t>(col) + dc, f.w);
                T* dst = gx->ptr() + (rr * f.w + cc) * f.c;
                const T* src = g.ptr() + (r * f.w + col) * f.c;
                for (std::size_t ch = 0; ch < f.c; ++ch)
                  dst[ch] += ninth * src[ch];
              }
      });
}

#define SSSM_INSTANTIATE_OPS(T)                                           \
  template Var<T> add(Var<T>, Var<T>);                                    \
  template Var<T> sub(Var<T>, Var<T>);                                    \
  template Var<T> mul(Var<T>, Var<T>);                                    \
  template Var<T> div(Var<T>, Var<T>);                                    \
  template Var<T> neg(Var<T>);                                            \
  template Var<T> abs(Var<T>);                                            \
  template Var<T> exp(Var<T>);                                            \
  template Var<T> relu(Var<T>);                                           \
  template Var<T> scale(Var<T>, double);                                  \
  template Var<T> add_scalar(Var<T>, double);                             \
  template Var<T> sum(Var<T>);                                            \
  template Var<T> mean(Var<T>);                                           \
  template Var<T> sum_axis(Var<T>, std::size_t);                          \
  template Var<T> mean_axis(Var<T>, std::size_t);                         \
  template Var<T> softmax(Var<T>, std::size_t);                           \
  template Var<T> reshape(Var<T>, Shape);                                 \
  template Var<T> slice(Var<T>, std::size_t, std::size_t, std::size_t);   \
  template Var<T> repeat(Var<T>, std::size_t, std::size_t);               \
  template Var<T> spatial_gradient(Var<T>, int, SpatialAxis);             \
  template Var<T> mean_pool3x3(Var<T>);

SSSM_INSTANTIATE_OPS(float)
SSSM_INSTANTIATE_OPS(double)

}  // namespace sssm
