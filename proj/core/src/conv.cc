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
#include "sssm/conv.h"

#include <Eigen/Core>
#include <algorithm>
#include <string>
#include <vector>

namespace sssm {
namespace {

// Convolution from an `in` grid to an `out` grid, both with up to three
// spatial axes (a 2-D convolution uses depth 1 and kernel depth 1).
struct Geometry {
  std::size_t in[3];
  std::size_t out[3];
  std::size_t k[3];
  std::ptrdiff_t pad[3];
  std::size_t stride;
  std::size_t cin;
  std::size_t cout;

  std::size_t patch() const { return k[0] * k[1] * k[2] * cin; }
  std::size_t in_positions() const { return in[0] * in[1] * in[2]; }
  std::size_t out_positions() const { return out[0] * out[1] * out[2]; }
};

// Rows per im2col block, so a block stays around 4 MiB.
std::size_t block_rows(const Geometry& g) {
  constexpr std::size_t kBlockElems = std::size_t{1} << 20;
  return std::max<std::size_t>(1, kBlockElems / g.patch());
}

// Gathers input patches for output rows [r0, r1) into `cols`, one row per
// output position, columns ordered (kh, kw, kd, cin) like the kernel.
template <typename T>
void im2col(const T* input, const Geometry& g, std::size_t r0, std::size_t r1,
            T* cols) {
  const std::size_t p = g.patch();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::size_t od = r % g.out[2];
    const std::size_t ow = (r / g.out[2]) % g.out[1];
    const std::size_t oh = r / (g.out[2] * g.out[1]);
    T* dst = cols + (r - r0) * p;
    for (std::size_t a = 0; a < g.k[0]; ++a) {
      const std::ptrdiff_t ih =
          static_cast<std::ptrdiff_t>(oh * g.stride + a) - g.pad[0];
      const bool h_ok = ih >= 0 && ih < static_cast<std::ptrdiff_t>(g.in[0]);
      for (std::size_t b = 0; b < g.k[1]; ++b) {
        const std::ptrdiff_t iw =
            static_cast<std::ptrdiff_t>(ow * g.stride + b) - g.pad[1];
        const bool w_ok =
            h_ok && iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.in[1]);
        for (std::size_t c = 0; c < g.k[2]; ++c, dst += g.cin) {
          const std::ptrdiff_t id =
              static_cast<std::ptrdiff_t>(od * g.stride + c) - g.pad[2];
          if (w_ok && id >= 0 && id < static_cast<std::ptrdiff_t>(g.in[2])) {
            const T* src =
                input + ((static_cast<std::size_t>(ih) * g.in[1] +
                          static_cast<std::size_t>(iw)) *
                             g.in[2] +
                         static_cast<std::size_t>(id)) *
                            g.cin;
            std::copy_n(src, g.cin, dst);
          } else {
            std::fill_n(dst, g.cin, T{0});
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds `cols` back onto the input grid.
template <typename T>
void col2im(const T* cols, const Geometry& g, std::size_t r0, std::size_t r1,
            T* input) {
  const std::size_t p = g.patch();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::size_t od = r % g.out[2];
    const std::size_t ow = (r / g.out[2]) % g.out[1];
    const std::size_t oh = r / (g.out[2] * g.out[1]);
    const T* src = cols + (r - r0) * p;
    for (std::size_t a = 0; a < g.k[0]; ++a) {
      const std::ptrdiff_t ih =
          static_cast<std::ptrdiff_t>(oh * g.stride + a) - g.pad[0];
      const bool h_ok = ih >= 0 && ih < static_cast<std::ptrdiff_t>(g.in[0]);
      for (std::size_t b = 0; b < g.k[1]; ++b) {
        const std::ptrdiff_t iw =
            static_cast<std::ptrdiff_t>(ow * g.stride + b) - g.pad[1];
        const bool w_ok =
            h_ok && iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.in[1]);
        for (std::size_t c = 0; c < g.k[2]; ++c, src += g.cin) {
          const std::ptrdiff_t id =
              static_cast<std::ptrdiff_t>(od * g.stride + c) - g.pad[2];
          if (w_ok && id >= 0 && id < static_cast<std::ptrdiff_t>(g.in[2])) {
            T* dst = input + ((static_cast<std::size_t>(ih) * g.in[1] +
                               static_cast<std::size_t>(iw)) *
                                  g.in[2] +
                              static_cast<std::size_t>(id)) *
                                 g.cin;
            for (std::size_t ch = 0; ch < g.cin; ++ch) dst[ch] += src[ch];
          }
        }
      }
    }
  }
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// out[out_positions, cout] = im2col(in) * kernel + bias
template <typename T>
void conv_forward(const Geometry& g, const T* in, const T* kernel,
                  const T* bias, T* out) {
  const std::size_t p = g.patch();
  const std::size_t n = g.out_positions();
  const std::size_t step = block_rows(g);
  std::vector<T> cols(std::min(step, n) * p);
  ConstMatMap<T> k(kernel, static_cast<Eigen::Index>(p),
                   static_cast<Eigen::Index>(g.cout));
  for (std::size_t r0 = 0; r0 < n; r0 += step) {
    const std::size_t r1 = std::min(n, r0 + step);
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    im2col(in, g, r0, r1, cols.data());
    ConstMatMap<T> c(cols.data(), rows, static_cast<Eigen::Index>(p));
    MatMap<T> o(out + r0 * g.cout, rows, static_cast<Eigen::Index>(g.cout));
    o.noalias() = c * k;
  }
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t ch = 0; ch < g.cout; ++ch) out[r * g.cout + ch] += bias[ch];
}

// Given d(out), accumulates d(in) and d(kernel). Either target may be null.
template <typename T>
void conv_backward(const Geometry& g, const T* in, const T* kernel,
                   const T* out_grad, T* in_grad, T* kernel_grad) {
  const std::size_t p = g.patch();
  const std::size_t n = g.out_positions();
  const std::size_t step = block_rows(g);
  std::vector<T> cols(std::min(step, n) * p);
  const auto pi = static_cast<Eigen::Index>(p);
  const auto co = static_cast<Eigen::Index>(g.cout);
  ConstMatMap<T> k(kernel, pi, co);
  for (std::size_t r0 = 0; r0 < n; r0 += step) {
    const std::size_t r1 = std::min(n, r0 + step);
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    ConstMatMap<T> go(out_grad + r0 * g.cout, rows, co);
    if (kernel_grad) {
      im2col(in, g, r0, r1, cols.data());
      ConstMatMap<T> c(cols.data(), rows, pi);
      MatMap<T> gk(kernel_grad, pi, co);
      gk.noalias() += c.transpose() * go;
    }
    if (in_grad) {
      MatMap<T> dc(cols.data(), rows, pi);
      dc.noalias() = go * k.transpose();
      col2im(cols.data(), g, r0, r1, in_grad);
    }
  }
}

// Transposed convolution: out(big) = im2col^T(in(small) * kernel^T) + bias.
// Here g describes the forward conv big -> small, so g.cin is the big-side
// channel count and g.cout the small-side one.
template <typename T>
void deconv_forward(const Geometry& g, const T* in, const T* kernel,
                    const T* bias, T* out) {
  const std::size_t p = g.patch();
  const std::size_t n = g.out_positions();
  const std::size_t step = block_rows(g);
  std::vector<T> cols(std::min(step, n) * p);
  const auto pi = static_cast<Eigen::Index>(p);
  const auto cs = static_cast<Eigen::Index>(g.cout);
  ConstMatMap<T> k(kernel, pi, cs);
  for (std::size_t r0 = 0; r0 < n; r0 += step) {
    const std::size_t r1 = std::min(n, r0 + step);
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    ConstMatMap<T> x(in + r0 * g.cout, rows, cs);
    MatMap<T> dc(cols.data(), rows, pi);
    dc.noalias() = x * k.transpose();
    col2im(cols.data(), g, r0, r1, out);
  }
  const std::size_t big = g.in_positions();
  for (std::size_t r = 0; r < big; ++r)
    for (std::size_t ch = 0; ch < g.cin; ++ch) out[r * g.cin + ch] += bias[ch];
}

template <typename T>
void deconv_backward(const Geometry& g, const T* in, const T* kernel,
                     const T* out_grad, T* in_grad, T* kernel_grad) {
  const std::size_t p = g.patch();
  const std::size_t n = g.out_positions();
  const std::size_t step = block_rows(g);
  std::vector<T> cols(std::min(step, n) * p);
  const auto pi = static_cast<Eigen::Index>(p);
  const auto cs = static_cast<Eigen::Index>(g.cout);
  ConstMatMap<T> k(kernel, pi, cs);
  for (std::size_t r0 = 0; r0 < n; r0 += step) {
    const std::size_t r1 = std::min(n, r0 + step);
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    im2col(out_grad, g, r0, r1, cols.data());
    ConstMatMap<T> c(cols.data(), rows, pi);
    if (in_grad) {
      MatMap<T> gx(in_grad + r0 * g.cout, rows, cs);
      gx.noalias() += c * k;
    }
    if (kernel_grad) {
      ConstMatMap<T> x(in + r0 * g.cout, rows, cs);
      MatMap<T> gk(kernel_grad, pi, cs);
      gk.noalias() += c.transpose() * x;
    }
  }
}

template <typename T>
void bias_backward(const Tensor<T>& out_grad, std::size_t channels,
                   Tensor<T>& bias_grad) {
  const std::size_t n = out_grad.size() / channels;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t ch = 0; ch < channels; ++ch)
      bias_grad[ch] += out_grad[r * channels + ch];
}

std::string shape_msg(const char* op, const char* what, const Shape& s) {
  return std::string(op) + ": bad " + what + " shape " + to_string(s);
}

template <typename T>
Var<T> record_conv(const char* op, const Geometry& g, Var<T> input,
                   Var<T> kernel, Var<T> bias, Shape out_shape) {
  Tensor<T> out(std::move(out_shape));
  conv_forward(g, input.value().ptr(), kernel.value().ptr(),
               bias.value().ptr(), out.ptr());
  return input.tape->record(
      op, std::move(out), {input, kernel, bias},
      [g, input, kernel, bias](const Tensor<T>&, const Tensor<T>& grad,
                               Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(input.id);
        Tensor<T>* gk = tape.accumulator(kernel.id);
        conv_backward(g, tape.value(input).ptr(), tape.value(kernel).ptr(),
                      grad.ptr(), gx ? gx->ptr() : nullptr,
                      gk ? gk->ptr() : nullptr);
        if (Tensor<T>* gb = tape.accumulator(bias.id)) {
          bias_backward(grad, g.cout, *gb);
        }
      });
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride,
              Padding padding) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 3) throw InvalidArgument(shape_msg("conv2d", "input", xs));
  if (ks.size() != 4 || ks[0] != ks[1] || ks[0] % 2 == 0) {
    throw InvalidArgument(shape_msg("conv2d", "kernel", ks));
  }
  if (ks[2] != xs[2]) {
    throw InvalidArgument("conv2d: input has " + std::to_string(xs[2]) +
                          " channels but kernel expects " +
                          std::to_string(ks[2]));
  }
  if (bias.shape() != Shape{ks[3]}) {
    throw InvalidArgument(shape_msg("conv2d", "bias", bias.shape()));
  }
  if (stride < 1) throw InvalidArgument("conv2d: stride must be >= 1");
  const std::size_t k = ks[0];
  Geometry g{};
  g.in[0] = xs[0];
  g.in[1] = xs[1];
  g.in[2] = 1;
  g.k[0] = g.k[1] = k;
  g.k[2] = 1;
  g.stride = stride;
  g.cin = ks[2];
  g.cout = ks[3];
  for (int a = 0; a < 2; ++a) {
    if (padding == Padding::kSame) {
      g.pad[a] = static_cast<std::ptrdiff_t>(k / 2);
      g.out[a] = (g.in[a] + stride - 1) / stride;
    } else {
      if (g.in[a] < k) {
        throw InvalidArgument("conv2d: input " + to_string(xs) +
                              " smaller than kernel");
      }
      g.pad[a] = 0;
      g.out[a] = (g.in[a] - k) / stride + 1;
    }
  }
  g.pad[2] = 0;
  g.out[2] = 1;
  return record_conv("conv2d", g, input, kernel, bias,
                     Shape{g.out[0], g.out[1], g.cout});
}

template <typename T>
Var<T> conv3d(Var<T> input, Var<T> kernel, Var<T> bias, std::size_t stride) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4) throw InvalidArgument(shape_msg("conv3d", "input", xs));
  if (ks.size() != 5 || ks[0] != 3 || ks[1] != 3 || ks[2] != 3) {
    throw InvalidArgument(shape_msg("conv3d", "kernel", ks));
  }
  if (ks[3] != xs[3]) {
    throw InvalidArgument("conv3d: input has " + std::to_string(xs[3]) +
                          " channels but kernel expects " +
                          std::to_string(ks[3]));
  }
  if (bias.shape() != Shape{ks[4]}) {
    throw InvalidArgument(shape_msg("conv3d", "bias", bias.shape()));
  }
  if (stride != 1 && stride != 2) {
    throw InvalidArgument("conv3d: stride must be 1 or 2");
  }
  Geometry g{};
  for (int a = 0; a < 3; ++a) {
    if (xs[a] % stride != 0) {
      throw InvalidArgument("conv3d: extents " + to_string(xs) +
                            " not divisible by stride " +
                            std::to_string(stride));
    }
    g.in[a] = xs[a];
    g.out[a] = xs[a] / stride;
    g.k[a] = 3;
    g.pad[a] = 1;
  }
  g.stride = stride;
  g.cin = ks[3];
  g.cout = ks[4];
  return record_conv("conv3d", g, input, kernel, bias,
                     Shape{g.out[0], g.out[1], g.out[2], g.cout});
}

template <typename T>
Var<T> deconv3d(Var<T> input, Var<T> kernel, Var<T> bias) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4) throw InvalidArgument(shape_msg("deconv3d", "input", xs));
  if (ks.size() != 5 || ks[0] != 3 || ks[1] != 3 || ks[2] != 3) {
    throw InvalidArgument(shape_msg("deconv3d", "kernel", ks));
  }
  if (ks[4] != xs[3]) {
    throw InvalidArgument("deconv3d: input has " + std::to_string(xs[3]) +
                          " channels but kernel expects " +
                          std::to_string(ks[4]));
  }
  if (bias.shape() != Shape{ks[3]}) {
    throw InvalidArgument(shape_msg("deconv3d", "bias", bias.shape()));
  }
  Geometry g{};
  for (int a = 0; a < 3; ++a) {
    g.in[a] = 2 * xs[a];
    g.out[a] = xs[a];
    g.k[a] = 3;
    g.pad[a] = 1;
  }
  g.stride = 2;
  g.cin = ks[3];
  g.cout = ks[4];
  Tensor<T> out(Shape{g.in[0], g.in[1], g.in[2], g.cin});
  deconv_forward(g, input.value().ptr(), kernel.value().ptr(),
                 bias.value().ptr(), out.ptr());
  return input.tape->record(
      "deconv3d", std::move(out), {input, kernel, bias},
      [g, input, kernel, bias](const Tensor<T>&, const Tensor<T>& grad,
                               Tape<T>& tape) {
        Tensor<T>* gx = tape.accumulator(input.id);
        Tensor<T>* gk = tape.accumulator(kernel.id);
        deconv_backward(g, tape.value(input).ptr(), tape.value(kernel).ptr(),
                        grad.ptr(), gx ? gx->ptr() : nullptr,
                        gk ? gk->ptr() : nullptr);
        if (Tensor<T>* gb = tape.accumulator(bias.id)) {
          bias_backward(grad, g.cin, *gb);
        }
      });
}

template Var<float> conv2d(Var<float>, Var<float>, Var<float>, std::size_t,
                           Padding);
template Var<double> conv2d(Var<double>, Var<double>, Var<double>, std::size_t,
                            Padding);
template Var<float> conv3d(Var<float>, Var<float>, Var<float>, std::size_t);
template Var<double> conv3d(Var<double>, Var<double>, Var<double>,
                            std::size_t);
template Var<float> deconv3d(Var<float>, Var<float>, Var<float>);
template Var<double> deconv3d(Var<double>, Var<double>, Var<double>);

}  // namespace sssm
