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
#include "sssm/net.h"

#include <cmath>
#include <random>
#include <string>

#include "sssm/conv.h"
#include "sssm/ops.h"

namespace sssm {
namespace {

constexpr int kImageChannels = 3;

std::string feature_name(int layer, const char* field) {
  return "feature.conv" + std::to_string(layer) + "." + field;
}

std::string tdm_name(const std::string& block, const char* field) {
  return "restdm." + block + "." + field;
}

class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : rng_(seed) {}
  // Uniform in [-bound, bound) from the top 53 bits of the generator.
  double operator()(double bound) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * bound;
  }

 private:
  std::mt19937_64 rng_;
};

void add_kernel(ParameterSet<float>& params, UniformSource& uniform,
                const std::string& prefix, Shape shape, double fan_in,
                double gain, std::size_t bias_len) {
  Tensor<float> w(std::move(shape));
  const double bound = std::sqrt(3.0 * gain / fan_in);
  for (auto& v : w.data()) v = static_cast<float>(uniform(bound));
  params.add(prefix + ".weight", std::move(w));
  params.add(prefix + ".bias", Tensor<float>(Shape{bias_len}));
}

template <typename T>
Var<T> bind_param(NetworkWeights<T>& weights, Tape<T>& tape, const std::string& name) {
  return tape.parameter(weights.params.get(name));
}

template <typename T>
Var<T> tdm_conv(NetworkWeights<T>& w, Var<T> x, const std::string& block,
                std::size_t stride) {
  Tape<T>& tape = *x.tape;
  return conv3d(x, bind_param(w, tape, tdm_name(block, "weight")),
                bind_param(w, tape, tdm_name(block, "bias")), stride);
}

template <typename T>
Var<T> tdm_deconv(NetworkWeights<T>& w, Var<T> x, const std::string& block) {
  Tape<T>& tape = *x.tape;
  return deconv3d(x, bind_param(w, tape, tdm_name(block, "weight")),
                  bind_param(w, tape, tdm_name(block, "bias")));
}

// R_i(e) = e + b(relu(a(e)))
template <typename T>
Var<T> residual_block(NetworkWeights<T>& w, Var<T> e, int scale) {
  const std::string base = "res" + std::to_string(scale);
  Var<T> h = relu(tdm_conv(w, e, base + ".a", 1));
  return add(e, tdm_conv(w, h, base + ".b", 1));
}

}  // namespace

NetConfig NetConfig::toy() {
  NetConfig c;
  c.feature_layers = 6;
  c.feature_dim = 16;
  c.disparity_range = 16;
  c.restdm_scales = 2;
  return c;
}

void NetConfig::validate() const {
  if (feature_layers < 1 || skip_every < 1 || feature_layers % skip_every != 0) {
    throw InvalidArgument("feature_layers (" + std::to_string(feature_layers) +
                          ") must be a positive multiple of skip_every (" +
                          std::to_string(skip_every) + ")");
  }
  if (feature_dim < 1) throw InvalidArgument("feature_dim must be positive");
  if (kernel < 1 || kernel % 2 == 0) {
    throw InvalidArgument("kernel must be a positive odd integer");
  }
  if (disparity_range < 0) {
    throw InvalidArgument("disparity_range must be non-negative");
  }
  if (restdm_scales < 0 || restdm_scales > 6) {
    throw InvalidArgument("restdm_scales must be in [0, 6]");
  }
}

std::size_t NetConfig::volume_levels() const {
  const std::size_t a = alignment();
  const std::size_t n = static_cast<std::size_t>(disparity_range) + 1;
  return (n + a - 1) / a * a;
}

NetworkWeights<float> init_weights(const NetConfig& config, std::uint64_t seed) {
  config.validate();
  NetworkWeights<float> w{config, {}};
  UniformSource uniform(seed);
  const auto k = static_cast<std::size_t>(config.kernel);
  const auto f = static_cast<std::size_t>(config.feature_dim);
  const double kk = static_cast<double>(k * k);
  for (int i = 0; i < config.feature_layers; ++i) {
    const std::size_t cin = i == 0 ? kImageChannels : f;
    const bool last = i + 1 == config.feature_layers;
    add_kernel(w.params, uniform, "feature.conv" + std::to_string(i),
               Shape{k, k, cin, f}, kk * static_cast<double>(cin),
               last ? 1.0 : 2.0, f);
  }
  const int scales = config.restdm_scales;
  if (scales == 0) {
    add_kernel(w.params, uniform, "restdm.project", Shape{3, 3, 3, 2 * f, 1},
               27.0 * 2.0 * static_cast<double>(f), 1.0, 1);
    return w;
  }
  for (int i = 1; i <= scales; ++i) {
    const std::size_t cin = i == 1 ? 2 * f : f;
    const std::string s = std::to_string(i);
    add_kernel(w.params, uniform, "restdm.down" + s, Shape{3, 3, 3, cin, f},
               27.0 * static_cast<double>(cin), 2.0, f);
    add_kernel(w.params, uniform, "restdm.res" + s + ".a", Shape{3, 3, 3, f, f},
               27.0 * static_cast<double>(f), 2.0, f);
    add_kernel(w.params, uniform, "restdm.res" + s + ".b", Shape{3, 3, 3, f, f},
               27.0 * static_cast<double>(f), 1.0, f);
  }
  // A stride-2 transposed conv sees on average 27/8 taps per output voxel.
  const double up_fan_in = 27.0 / 8.0 * static_cast<double>(f);
  for (int i = scales; i >= 1; --i) {
    const std::size_t cout = i == 1 ? 1 : f;
    add_kernel(w.params, uniform, "restdm.up" + std::to_string(i),
               Shape{3, 3, 3, cout, f}, up_fan_in, i == 1 ? 1.0 : 2.0, cout);
  }
  return w;
}

template <typename T>
Var<T> extract_features(NetworkWeights<T>& weights, Var<T> image) {
  const NetConfig& c = weights.config;
  const Shape& s = image.shape();
  const auto k = static_cast<std::size_t>(c.kernel);
  if (s.size() != 3 || s[2] != kImageChannels) {
    throw InvalidArgument("extract_features: expected [H, W, 3] image, got " +
                          to_string(s));
  }
  if (s[0] < k || s[1] < k) {
    throw InvalidArgument("extract_features: image " + to_string(s) +
                          " smaller than the " + std::to_string(k) + "x" +
                          std::to_string(k) + " kernel");
  }
  Tape<T>& tape = *image.tape;
  // Center intensities on zero so the first layer starts without a DC offset.
  Var<T> x = add_scalar(image, -0.5);
  Var<T> anchor{};
  for (int i = 0; i < c.feature_layers; ++i) {
    x = conv2d(x, bind_param(weights, tape, feature_name(i, "weight")),
               bind_param(weights, tape, feature_name(i, "bias")));
    if (i + 1 < c.feature_layers) x = relu(x);
    if (i == 0) {
      anchor = x;
    } else if ((i + 1) % c.skip_every == 0) {
      x = add(x, anchor);
      anchor = x;
    }
  }
  return x;
}

template <typename T>
Var<T> build_feature_volume(Var<T> f_left, Var<T> f_right,
                            std::size_t max_disparity,
                            VolumeDirection direction) {
  if (f_left.shape() != f_right.shape() || f_left.shape().size() != 3) {
    throw InvalidArgument("build_feature_volume: feature maps " +
                          to_string(f_left.shape()) + " and " +
                          to_string(f_right.shape()) +
                          " must both be [H, W, F]");
  }
  const std::size_t h = f_left.dim(0), w = f_left.dim(1), f = f_left.dim(2);
  if (max_disparity >= w) {
    throw InvalidArgument("build_feature_volume: disparity range " +
                          std::to_string(max_disparity) +
                          " must be smaller than width " + std::to_string(w));
  }
  const std::size_t levels = max_disparity + 1;
  const bool ltr = direction == VolumeDirection::kLeftToRight;
  // `anchor` is copied per level; `moving` is shifted by -d (LR) or +d (RL).
  Var<T> anchor = ltr ? f_left : f_right;
  Var<T> moving = ltr ? f_right : f_left;
  // Source column of the shifted sample, or -1 when out of range.
  auto source_col = [ltr, w](std::size_t u, std::size_t d) -> std::ptrdiff_t {
    const auto col = ltr ? static_cast<std::ptrdiff_t>(u) -
                               static_cast<std::ptrdiff_t>(d)
                         : static_cast<std::ptrdiff_t>(u + d);
    return (col < 0 || col >= static_cast<std::ptrdiff_t>(w)) ? -1 : col;
  };

  Tensor<T> out(Shape{h, w, levels, 2 * f});
  const Tensor<T>& av = anchor.value();
  const Tensor<T>& mv = moving.value();
  for (std::size_t v = 0; v < h; ++v)
    for (std::size_t u = 0; u < w; ++u) {
      const T* a = av.ptr() + (v * w + u) * f;
      for (std::size_t d = 0; d < levels; ++d) {
        T* dst = out.ptr() + ((v * w + u) * levels + d) * 2 * f;
        std::copy_n(a, f, dst);
        const std::ptrdiff_t col = source_col(u, d);
        if (col >= 0) {
          std::copy_n(mv.ptr() + (v * w + static_cast<std::size_t>(col)) * f,
                      f, dst + f);
        }
      }
    }
  return f_left.tape->record(
      "build_feature_volume", std::move(out), {anchor, moving},
      [anchor, moving, h, w, f, levels, source_col](
          const Tensor<T>&, const Tensor<T>& g, Tape<T>& tape) {
        Tensor<T>* ga = tape.accumulator(anchor.id);
        Tensor<T>* gm = tape.accumulator(moving.id);
        for (std::size_t v = 0; v < h; ++v)
          for (std::size_t u = 0; u < w; ++u)
            for (std::size_t d = 0; d < levels; ++d) {
              const T* src = g.ptr() + ((v * w + u) * levels + d) * 2 * f;
              if (ga) {
                T* dst = ga->ptr() + (v * w + u) * f;
                for (std::size_t c = 0; c < f; ++c) dst[c] += src[c];
              }
              const std::ptrdiff_t col = source_col(u, d);
              if (gm && col >= 0) {
                T* dst = gm->ptr() +
                         (v * w + static_cast<std::size_t>(col)) * f;
                for (std::size_t c = 0; c < f; ++c) dst[c] += src[f + c];
              }
            }
      });
}

template <typename T>
Var<T> res_tdm(NetworkWeights<T>& weights, Var<T> volume) {
  const NetConfig& c = weights.config;
  const Shape& s = volume.shape();
  if (s.size() != 4 ||
      s[3] != 2 * static_cast<std::size_t>(c.feature_dim)) {
    throw InvalidArgument("res_tdm: expected [H, W, L, 2F] volume, got " +
                          to_string(s));
  }
  const std::size_t a = c.alignment();
  if (s[0] % a || s[1] % a || s[2] % a) {
    throw InvalidArgument("res_tdm: volume " + to_string(s) +
                          " is not divisible by " + std::to_string(a));
  }
  Var<T> out;
  if (c.restdm_scales == 0) {
    out = tdm_conv(weights, volume, "project", 1);
  } else {
    // Bottom-up: e_i at scale 1/2^i, then each through its residual module.
    std::vector<Var<T>> skips;
    Var<T> e = volume;
    for (int i = 1; i <= c.restdm_scales; ++i) {
      e = relu(tdm_conv(weights, e, "down" + std::to_string(i), 2));
      skips.push_back(residual_block(weights, e, i));
    }
    // Top-down: upsample and add the residual output of the next finer scale.
    Var<T> t = skips.back();
    for (int i = c.restdm_scales; i >= 2; --i) {
      t = relu(tdm_deconv(weights, t, "up" + std::to_string(i)));
      t = add(t, skips[static_cast<std::size_t>(i - 2)]);
    }
    out = tdm_deconv(weights, t, "up1");
  }
  return reshape(out, Shape{s[0], s[1], s[2]});
}

template <typename T>
Var<T> soft_argmin(Var<T> costs) {
  const Shape& s = costs.shape();
  if (s.size() != 3) {
    throw InvalidArgument("soft_argmin: expected [H, W, D+1], got " +
                          to_string(s));
  }
  Tensor<T> ramp(s);
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    ramp[i] = static_cast<T>(i % s[2]);
  }
  Var<T> p = softmax(neg(costs), 2);
  return sum_axis(mul(p, costs.tape->constant(std::move(ramp))), 2);
}

template <typename T>
DisparityPair<T> forward(NetworkWeights<T>& weights, Var<T> left,
                         Var<T> right) {
  const NetConfig& c = weights.config;
  if (left.shape() != right.shape()) {
    throw InvalidArgument("forward: left " + to_string(left.shape()) +
                          " and right " + to_string(right.shape()) +
                          " differ in shape");
  }
  const Var<T> f_left = extract_features(weights, left);
  const Var<T> f_right = extract_features(weights, right);
  const std::size_t levels = c.volume_levels();
  const auto candidates = static_cast<std::size_t>(c.disparity_range) + 1;
  auto disparity = [&](VolumeDirection dir) {
    Var<T> vol = build_feature_volume(f_left, f_right, levels - 1, dir);
    Var<T> costs = res_tdm(weights, vol);
    if (levels != candidates) costs = slice(costs, 2, 0, candidates);
    return soft_argmin(costs);
  };
  return {disparity(VolumeDirection::kLeftToRight),
          disparity(VolumeDirection::kRightToLeft)};
}

#define SSSM_INSTANTIATE_NET(T)                                              \
  template Var<T> extract_features(NetworkWeights<T>&, Var<T>);              \
  template Var<T> build_feature_volume(Var<T>, Var<T>, std::size_t,          \
                                       VolumeDirection);                     \
  template Var<T> res_tdm(NetworkWeights<T>&, Var<T>);                       \
  template Var<T> soft_argmin(Var<T>);                                       \
  template DisparityPair<T> forward(NetworkWeights<T>&, Var<T>, Var<T>);

SSSM_INSTANTIATE_NET(float)
SSSM_INSTANTIATE_NET(double)

}  // namespace sssm
