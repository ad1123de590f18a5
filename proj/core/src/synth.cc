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
#include "sssm/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sssm {
namespace {

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Separable Gaussian blur with clamped borders, in place.
void blur(std::vector<double>& img, std::size_t h, std::size_t w, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double norm = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= norm;
  std::vector<double> tmp(img.size());
  auto clampi = [](long i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
  };
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] *
               img[r * w + clampi(static_cast<long>(c) + i, w)];
      tmp[r * w + c] = acc;
    }
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] *
               tmp[clampi(static_cast<long>(r) + i, h) * w + c];
      img[r * w + c] = acc;
    }
}

// Multi-octave smoothed noise, one plane per channel, rescaled to
// [0.05, 0.95].
struct Canvas {
  std::size_t h, w;
  std::vector<double> planes[3];

  double at(std::size_t ch, std::size_t r, double x) const {
    const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const auto x0 = static_cast<std::size_t>(std::floor(xc));
    const std::size_t x1 = std::min(x0 + 1, w - 1);
    const double a = xc - static_cast<double>(x0);
    const auto& p = planes[ch];
    return (1.0 - a) * p[r * w + x0] + a * p[r * w + x1];
  }
};

Canvas make_canvas(std::mt19937_64& rng, std::size_t h, std::size_t w,
                   const SynthSpec& spec) {
  Canvas cv{h, w, {}};
  for (auto& plane : cv.planes) {
    plane.assign(h * w, 0.0);
    double weight = 1.0;
    for (int octave = 0; octave < 4; ++octave) {
      std::vector<double> noise(h * w);
      for (auto& v : noise) v = unit(rng) - 0.5;
      blur(noise, h, w, spec.base_sigma * std::ldexp(1.0, octave));
      // Blurring shrinks variance roughly by 1/sigma^2; compensate.
      const double gain = weight * spec.base_sigma * std::ldexp(1.0, octave);
      for (std::size_t i = 0; i < noise.size(); ++i) plane[i] += gain * noise[i];
      weight *= spec.octave_gain;
    }
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const double mn = *lo, range = std::max(*hi - *lo, 1e-12);
    for (auto& v : plane) v = 0.05 + 0.9 * (v - mn) / range;
  }
  return cv;
}

// Affine map u -> d_L(u) = slope * u + row_offset for one image row.
struct RowPlane {
  double slope;
  double offset;
};

}  // namespace

SynthSample synth_pair(std::uint64_t seed, std::size_t height,
                       std::size_t width, const SynthSpec& spec) {
  if (height < 3 || width < 4) {
    throw InvalidArgument("synth_pair: image too small");
  }
  std::mt19937_64 rng(seed);
  const double max_d = spec.pattern == DisparityPattern::kConstant
                           ? spec.disparity
                           : spec.max_disparity;
  if (spec.pattern == DisparityPattern::kConstant &&
      !(spec.disparity >= 0 && spec.disparity < static_cast<double>(width) / 4)) {
    throw InvalidArgument("synth_pair: disparity " +
                          std::to_string(spec.disparity) + " must be in [0, W/4)");
  }
  if (spec.pattern == DisparityPattern::kPiecewisePlanar &&
      !(spec.min_disparity >= 0 && spec.min_disparity <= spec.max_disparity &&
        spec.max_disparity < static_cast<double>(width) / 4 && spec.bands >= 1)) {
    throw InvalidArgument("synth_pair: bad planar disparity range");
  }

  // Per-row planes for the left view.
  std::vector<RowPlane> rows(height);
  if (spec.pattern == DisparityPattern::kConstant) {
    for (auto& r : rows) r = {0.0, spec.disparity};
  } else {
    const auto bands = static_cast<std::size_t>(spec.bands);
    const double span = spec.max_disparity - spec.min_disparity;
    for (std::size_t b = 0; b < bands; ++b) {
      // Endpoint disparities at u = 0 and u = W-1, both inside the range.
      const double d0 = spec.min_disparity + span * unit(rng);
      const double d1 = spec.min_disparity + span * unit(rng);
      const double slope = (d1 - d0) / static_cast<double>(width - 1);
      const std::size_t r0 = b * height / bands;
      const std::size_t r1 = (b + 1) * height / bands;
      for (std::size_t r = r0; r < r1; ++r) rows[r] = {slope, d0};
    }
  }

  // Canvas columns cover [-pad, W + pad) in right-image coordinates.
  const auto pad = static_cast<std::size_t>(std::ceil(max_d)) + 2;
  const Canvas cv = make_canvas(rng, height, width + 2 * pad, spec);
  const auto off = static_cast<double>(pad);

  SynthSample s;
  s.pair.left = Tensor<float>(Shape{height, width, 3});
  s.pair.right = Tensor<float>(Shape{height, width, 3});
  s.gt_left.values = Tensor<float>(Shape{height, width});
  s.gt_right.values = Tensor<float>(Shape{height, width});
  s.gt_left.valid.assign(height * width, 0);
  s.gt_right.valid.assign(height * width, 0);
  const double last = static_cast<double>(width - 1);
  for (std::size_t r = 0; r < height; ++r) {
    const RowPlane p = rows[r];
    for (std::size_t u = 0; u < width; ++u) {
      const auto uf = static_cast<double>(u);
      const std::size_t i = r * width + u;
      const double dl = p.slope * uf + p.offset;
      // x = u - d_L(u) is affine in u with positive slope 1 - slope, so the
      // right-view disparity follows by inversion.
      const double src = (uf + p.offset) / (1.0 - p.slope);
      const double dr = src - uf;
      for (std::size_t c = 0; c < 3; ++c) {
        s.pair.right[i * 3 + c] = static_cast<float>(cv.at(c, r, uf + off));
        s.pair.left[i * 3 + c] = static_cast<float>(cv.at(c, r, uf - dl + off));
      }
      s.gt_left.values[i] = static_cast<float>(dl);
      s.gt_left.valid[i] = uf - dl >= 0.0;
      s.gt_right.values[i] = static_cast<float>(dr);
      s.gt_right.valid[i] = uf + dr <= last;
    }
  }
  return s;
}

std::vector<SynthSample> synth_dataset(std::uint64_t seed, std::size_t count,
                                       std::size_t height, std::size_t width,
                                       const SynthSpec& spec,
                                       bool integer_shift_range) {
  std::mt19937_64 rng(seed);
  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SynthSpec s = spec;
    if (spec.pattern == DisparityPattern::kConstant && integer_shift_range) {
      const auto lo = static_cast<long>(std::ceil(spec.min_disparity));
      const auto hi = static_cast<long>(std::floor(spec.max_disparity));
      const auto n = static_cast<std::uint64_t>(std::max(0L, hi - lo) + 1);
      s.disparity = static_cast<double>(lo + static_cast<long>(rng() % n));
    }
    out.push_back(synth_pair(rng(), height, width, s));
  }
  return out;
}

}  // namespace sssm
