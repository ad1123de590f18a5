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
#include "sssm/warp_loss.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "sssm/ops.h"

namespace sssm {
namespace {

template <typename T>
Var<T> windowed_mean(Var<T> per_pixel, ColumnWindow window) {
  const std::size_t w = per_pixel.dim(1);
  const std::size_t end = window.end == 0 ? w : std::min(window.end, w);
  if (window.begin >= end) {
    throw InvalidArgument("column window [" + std::to_string(window.begin) +
                          ", " + std::to_string(end) + ") is empty");
  }
  if (window.begin == 0 && end == w) return mean(per_pixel);
  return mean(slice(per_pixel, 1, window.begin, end));
}

template <typename T>
double scalar(Var<T> v) {
  return static_cast<double>(v.value()[0]);
}

}  // namespace

void StereoPair::validate() const {
  if (left.rank() != 3 || left.dim(2) != 3 || left.shape() != right.shape()) {
    throw InvalidArgument("stereo pair must be two [H, W, 3] images, got " +
                          sssm::to_string(left.shape()) + " and " +
                          sssm::to_string(right.shape()));
  }
  for (const Tensor<float>* img : {&left, &right}) {
    for (float v : img->data()) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw InvalidArgument("stereo pair intensities must lie in [0, 1]");
      }
    }
  }
}

void LossWeights::validate() const {
  for (double v : {photometric, smoothness, consistency, mdh, ssim, l1, gradient}) {
    if (!(v >= 0.0)) throw InvalidArgument("loss weights must be >= 0");
  }
}

ColumnWindow left_window(std::size_t width, std::size_t margin) {
  return {std::min(margin, width - 1), width};
}

ColumnWindow right_window(std::size_t width, std::size_t margin) {
  return {0, width - std::min(margin, width - 1)};
}

template <typename T>
Var<T> warp(Var<T> source, Var<T> disparity, WarpDirection direction) {
  const Shape& s = source.shape();
  if (s.size() != 2 && s.size() != 3) {
    throw InvalidArgument("warp: source must be [H, W] or [H, W, C], got " +
                          to_string(s));
  }
  if (disparity.shape() != Shape{s[0], s[1]}) {
    throw InvalidArgument("warp: disparity " + to_string(disparity.shape()) +
                          " does not match source " + to_string(s));
  }
  const std::size_t h = s[0], w = s[1], c = s.size() == 3 ? s[2] : 1;
  const Tensor<T>& dv = disparity.value();
  for (std::size_t i = 0; i < dv.size(); ++i) {
    if (dv[i] < T{0}) {
      throw InvalidArgument("warp: negative disparity " +
                            std::to_string(static_cast<double>(dv[i])));
    }
  }
  const T sign = direction == WarpDirection::kToRight ? T{1} : T{-1};
  const T max_x = static_cast<T>(w - 1);

  struct Sample {
    std::size_t x0, x1;
    T frac;
    bool clamped;
  };
  auto sample = [sign, max_x, w](std::size_t u, T d) {
    const T x = static_cast<T>(u) + sign * d;
    Sample sm{};
    if (x <= T{0}) {
      sm = {0, 0, T{0}, x < T{0}};
    } else if (x >= max_x) {
      sm = {w - 1, w - 1, T{0}, x > max_x};
    } else {
      const T fl = std::floor(x);
      sm.x0 = static_cast<std::size_t>(fl);
      sm.x1 = std::min(sm.x0 + 1, w - 1);
      sm.frac = x - fl;
      sm.clamped = false;
    }
    return sm;
  };

  const Tensor<T>& src = source.value();
  Tensor<T> out(s);
  for (std::size_t v = 0; v < h; ++v)
    for (std::size_t u = 0; u < w; ++u) {
      const Sample sm = sample(u, dv[v * w + u]);
      const T* a = src.ptr() + (v * w + sm.x0) * c;
      const T* b = src.ptr() + (v * w + sm.x1) * c;
      T* o = out.ptr() + (v * w + u) * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        o[ch] = (T{1} - sm.frac) * a[ch] + sm.frac * b[ch];
      }
    }
  return source.tape->record(
      "warp", std::move(out), {source, disparity},
      [source, disparity, h, w, c, sign, sample](
          const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* gs = tape.accumulator(source.id);
        Tensor<T>* gd = tape.accumulator(disparity.id);
        const Tensor<T>& src = tape.value(source);
        const Tensor<T>& dv = tape.value(disparity);
        for (std::size_t v = 0; v < h; ++v)
          for (std::size_t u = 0; u < w; ++u) {
            const Sample sm = sample(u, dv[v * w + u]);
            const T* go = g.ptr() + (v * w + u) * c;
            if (gs) {
              T* a = gs->ptr() + (v * w + sm.x0) * c;
              T* b = gs->ptr() + (v * w + sm.x1) * c;
              for (std::size_t ch = 0; ch < c; ++ch) {
                a[ch] += (T{1} - sm.frac) * go[ch];
                b[ch] += sm.frac * go[ch];
              }
            }
            if (gd && !sm.clamped && sm.x1 != sm.x0) {
              const T* a = src.ptr() + (v * w + sm.x0) * c;
              const T* b = src.ptr() + (v * w + sm.x1) * c;
              T acc = 0;
              for (std::size_t ch = 0; ch < c; ++ch) {
                acc += go[ch] * (b[ch] - a[ch]);
              }
              (*gd)[v * w + u] += sign * acc;
            }
          }
      });
}

template <typename T>
Var<T> ssim(Var<T> x, Var<T> y) {
  if (x.shape() != y.shape()) {
    throw InvalidArgument("ssim: shape mismatch " + to_string(x.shape()) +
                          " vs " + to_string(y.shape()));
  }
  Var<T> mu_x = mean_pool3x3(x);
  Var<T> mu_y = mean_pool3x3(y);
  Var<T> mu_xx = mul(mu_x, mu_x);
  Var<T> mu_yy = mul(mu_y, mu_y);
  Var<T> mu_xy = mul(mu_x, mu_y);
  Var<T> var_x = sub(mean_pool3x3(mul(x, x)), mu_xx);
  Var<T> var_y = sub(mean_pool3x3(mul(y, y)), mu_yy);
  Var<T> cov = sub(mean_pool3x3(mul(x, y)), mu_xy);
  Var<T> num = mul(add_scalar(scale(mu_xy, 2.0), kSsimC1),
                   add_scalar(scale(cov, 2.0), kSsimC2));
  Var<T> den = mul(add_scalar(add(mu_xx, mu_yy), kSsimC1),
                   add_scalar(add(var_x, var_y), kSsimC2));
  return div(num, den);
}

template <typename T>
Var<T> unary_loss(Var<T> image, Var<T> reconstruction,
                  const LossWeights& weights, ColumnWindow window) {
  if (image.shape() != reconstruction.shape()) {
    throw InvalidArgument("unary_loss: shape mismatch " +
                          to_string(image.shape()) + " vs " +
                          to_string(reconstruction.shape()));
  }
  Var<T> structure =
      scale(add_scalar(neg(ssim(image, reconstruction)), 1.0), weights.ssim / 2);
  Var<T> appearance = scale(abs(sub(image, reconstruction)), weights.l1);
  Var<T> grad_u = abs(sub(spatial_gradient(image, 1, SpatialAxis::kU),
                          spatial_gradient(reconstruction, 1, SpatialAxis::kU)));
  Var<T> grad_v = abs(sub(spatial_gradient(image, 1, SpatialAxis::kV),
                          spatial_gradient(reconstruction, 1, SpatialAxis::kV)));
  Var<T> gradient = scale(add(grad_u, grad_v), weights.gradient);
  return windowed_mean(add(add(structure, appearance), gradient), window);
}

template <typename T>
Var<T> smoothness_loss(Var<T> disparity, Var<T> image) {
  const Shape& ds = disparity.shape();
  const Shape& is = image.shape();
  if (ds.size() != 2 || is.size() < 2 || is[0] != ds[0] || is[1] != ds[1]) {
    throw InvalidArgument("smoothness_loss: disparity " + to_string(ds) +
                          " does not match image " + to_string(is));
  }
  Tape<T>& tape = *disparity.tape;
  Var<T> gray = is.size() == 3 ? mean_axis(tape.constant(image.value()), 2)
                               : tape.constant(image.value());
  Var<T> w_u = exp(neg(abs(spatial_gradient(gray, 2, SpatialAxis::kU))));
  Var<T> w_v = exp(neg(abs(spatial_gradient(gray, 2, SpatialAxis::kV))));
  Var<T> curv_u = abs(spatial_gradient(disparity, 2, SpatialAxis::kU));
  Var<T> curv_v = abs(spatial_gradient(disparity, 2, SpatialAxis::kV));
  return mean(add(mul(curv_u, w_u), mul(curv_v, w_v)));
}

template <typename T>
Var<T> loop_consistency_loss(Var<T> left, Var<T> right, Var<T> d_left,
                             Var<T> d_right, Side side, ColumnWindow window) {
  if (side == Side::kLeft) {
    Var<T> right_rec = warp(left, d_right, WarpDirection::kToRight);
    Var<T> left_loop = warp(right_rec, d_left, WarpDirection::kToLeft);
    return windowed_mean(abs(sub(left, left_loop)), window);
  }
  Var<T> left_rec = warp(right, d_left, WarpDirection::kToLeft);
  Var<T> right_loop = warp(left_rec, d_right, WarpDirection::kToRight);
  return windowed_mean(abs(sub(right, right_loop)), window);
}

template <typename T>
Var<T> mdh_loss(Var<T> disparity) {
  return mean(abs(disparity));
}

double LossReport::weighted_sum(const LossWeights& w) const {
  return w.photometric * (unary_l + unary_r) +
         w.smoothness * (smooth_l + smooth_r) +
         w.consistency * (loop_l + loop_r) + w.mdh * (mdh_l + mdh_r);
}

std::string LossReport::to_string() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "total=%.6g unary=(%.6g, %.6g) smooth=(%.6g, %.6g) "
                "loop=(%.6g, %.6g) mdh=(%.6g, %.6g)",
                total, unary_l, unary_r, smooth_l, smooth_r, loop_l, loop_r,
                mdh_l, mdh_r);
  return buf;
}

template <typename T>
LossReport LossTerms<T>::report() const {
  LossReport r;
  r.total = scalar(total);
  r.unary_l = scalar(unary_l);
  r.unary_r = scalar(unary_r);
  r.smooth_l = scalar(smooth_l);
  r.smooth_r = scalar(smooth_r);
  r.loop_l = scalar(loop_l);
  r.loop_r = scalar(loop_r);
  r.mdh_l = scalar(mdh_l);
  r.mdh_r = scalar(mdh_r);
  return r;
}

template <typename T>
LossTerms<T> total_loss(Var<T> left, Var<T> right, Var<T> d_left,
                        Var<T> d_right, const LossWeights& weights,
                        const LossOptions& options) {
  weights.validate();
  const std::size_t w = left.dim(1);
  const ColumnWindow lw = left_window(w, options.border_margin);
  const ColumnWindow rw = right_window(w, options.border_margin);
  LossTerms<T> t;
  LossReport partial;
  auto term = [&partial](const char* name, double LossReport::*field,
                         auto&& compute) -> Var<T> {
    try {
      Var<T> v = compute();
      partial.*field = scalar(v);
      return v;
    } catch (const NonFiniteError& e) {
      throw LossTermError(name, partial, e.what());
    }
  };
  t.unary_l = term("unary_l", &LossReport::unary_l, [&] {
    return unary_loss(left, warp(right, d_left, WarpDirection::kToLeft),
                      weights, lw);
  });
  t.unary_r = term("unary_r", &LossReport::unary_r, [&] {
    return unary_loss(right, warp(left, d_right, WarpDirection::kToRight),
                      weights, rw);
  });
  t.smooth_l = term("smooth_l", &LossReport::smooth_l,
                    [&] { return smoothness_loss(d_left, left); });
  t.smooth_r = term("smooth_r", &LossReport::smooth_r,
                    [&] { return smoothness_loss(d_right, right); });
  t.loop_l = term("loop_l", &LossReport::loop_l, [&] {
    return loop_consistency_loss(left, right, d_left, d_right, Side::kLeft, lw);
  });
  t.loop_r = term("loop_r", &LossReport::loop_r, [&] {
    return loop_consistency_loss(left, right, d_left, d_right, Side::kRight, rw);
  });
  t.mdh_l = term("mdh_l", &LossReport::mdh_l, [&] { return mdh_loss(d_left); });
  t.mdh_r = term("mdh_r", &LossReport::mdh_r, [&] { return mdh_loss(d_right); });
  t.total = term("total", &LossReport::total, [&] {
    Var<T> acc = scale(add(t.unary_l, t.unary_r), weights.photometric);
    acc = add(acc, scale(add(t.smooth_l, t.smooth_r), weights.smoothness));
    acc = add(acc, scale(add(t.loop_l, t.loop_r), weights.consistency));
    return add(acc, scale(add(t.mdh_l, t.mdh_r), weights.mdh));
  });
  return t;
}

#define SSSM_INSTANTIATE_LOSS(T)                                               \
  template Var<T> warp(Var<T>, Var<T>, WarpDirection);                         \
  template Var<T> ssim(Var<T>, Var<T>);                                        \
  template Var<T> unary_loss(Var<T>, Var<T>, const LossWeights&, ColumnWindow); \
  template Var<T> smoothness_loss(Var<T>, Var<T>);                             \
  template Var<T> loop_consistency_loss(Var<T>, Var<T>, Var<T>, Var<T>, Side,  \
                                        ColumnWindow);                         \
  template Var<T> mdh_loss(Var<T>);                                            \
  template struct LossTerms<T>;                                                \
  template LossTerms<T> total_loss(Var<T>, Var<T>, Var<T>, Var<T>,             \
                                   const LossWeights&, const LossOptions&);

SSSM_INSTANTIATE_LOSS(float)
SSSM_INSTANTIATE_LOSS(double)

}  // namespace sssm
