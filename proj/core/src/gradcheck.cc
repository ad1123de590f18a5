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
#include "sssm/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>

#include "sssm/conv.h"
#include "sssm/net.h"
#include "sssm/ops.h"
#include "sssm/warp_loss.h"

namespace sssm {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1,
                             double hi = 1) {
  Tensor<double> t(shape);
  for (double& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

// Magnitudes in [lo, hi] with random signs, away from kinks at zero.
Tensor<double> signed_tensor(const Shape& shape, Rng& rng, double lo = 0.1,
                             double hi = 1) {
  Tensor<double> t(shape);
  for (double& v : t.data()) {
    v = uniform(rng, lo, hi) * (rng() & 1 ? 1 : -1);
  }
  return t;
}

// Disparities whose sample positions stay clear of integer grid points.
Tensor<double> fractional_disparity(const Shape& shape, Rng& rng, int max_int) {
  Tensor<double> t(shape);
  for (double& v : t.data()) {
    v = static_cast<double>(rng() % (max_int + 1)) + uniform(rng, 0.2, 0.8);
  }
  return t;
}

std::vector<std::size_t> probe_indices(std::size_t n, std::size_t max_entries,
                                       Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (max_entries == 0 || n <= max_entries) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_entries);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void record_error(GradCheckResult& r, double a, double n,
                  const GradCheckOptions& o) {
  const double abs_err = std::abs(a - n);
  const double rel =
      abs_err / std::max({std::abs(a), std::abs(n), o.floor});
  r.max_abs_error = std::max(r.max_abs_error, abs_err);
  r.max_rel_error = std::max(r.max_rel_error, rel);
  ++r.entries;
}

std::uint64_t name_seed(const std::string& name, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : name) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

GradCheckResult check_gradient(const std::string& name,
                               const std::vector<Tensor<double>>& inputs,
                               const GradFunction& f,
                               const GradCheckOptions& options) {
  Rng rng(name_seed(name, options.seed));
  std::optional<Tensor<double>> weights;
  auto run = [&](const std::vector<Tensor<double>>& x,
                 std::vector<Tensor<double>>* grads) {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const Tensor<double>& t : x) vars.push_back(tape.leaf(t));
    Var<double> out = f(vars);
    if (!weights) weights = random_tensor(out.shape(), rng, 0.5, 1.5);
    Var<double> loss = sum(mul(out, tape.constant(*weights)));
    if (grads) {
      tape.backward(loss);
      grads->clear();
      for (std::size_t i = 0; i < vars.size(); ++i) {
        const Tensor<double>* g = tape.grad(vars[i]);
        grads->push_back(g ? *g : Tensor<double>(x[i].shape()));
      }
    }
    return loss.value()[0];
  };

  GradCheckResult r{name};
  std::vector<Tensor<double>> analytic;
  run(inputs, &analytic);
  std::vector<Tensor<double>> x = inputs;
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t i : probe_indices(x[k].size(), options.max_entries, rng)) {
      const double orig = x[k][i];
      x[k][i] = orig + options.step;
      const double up = run(x, nullptr);
      x[k][i] = orig - options.step;
      const double down = run(x, nullptr);
      x[k][i] = orig;
      record_error(r, analytic[k][i], (up - down) / (2 * options.step), options);
    }
  }
  r.passed = r.entries > 0 && r.max_rel_error < options.tolerance;
  return r;
}

GradCheckResult check_micro_pipeline(const GradCheckOptions& options) {
  NetConfig net;
  net.feature_layers = 4;
  net.feature_dim = 4;
  net.kernel = 3;
  net.skip_every = 2;
  net.disparity_range = 4;
  net.restdm_scales = 2;
  NetworkWeights<double> w = init_weights(net, options.seed).cast<double>();
  Rng rng(name_seed("pipeline", options.seed));
  // Zero biases put ReLU inputs exactly on the kink wherever the volume is
  // zero-padded; probe at a generic point instead.
  for (Parameter<double>& p : w.params) {
    if (p.name.size() > 5 && p.name.compare(p.name.size() - 5, 5, ".bias") == 0) {
      p.value = signed_tensor(p.value.shape(), rng, 0.05, 0.2);
    }
  }
  // Blurred random images so the warps see smooth intensities.
  auto image = [&rng] {
    Tensor<double> raw = random_tensor({8, 16, 3}, rng, 0, 1);
    Tensor<double> out({8, 16, 3});
    for (std::size_t v = 0; v < 8; ++v)
      for (std::size_t u = 0; u < 16; ++u)
        for (std::size_t c = 0; c < 3; ++c) {
          double acc = 0;
          int n = 0;
          for (int du = -1; du <= 1; ++du) {
            const int uu = static_cast<int>(u) + du;
            if (uu < 0 || uu >= 16) continue;
            acc += raw.at(v, static_cast<std::size_t>(uu), c);
            ++n;
          }
          out.at(v, u, c) = acc / n;
        }
    return out;
  };
  const Tensor<double> left = image(), right = image();
  LossWeights lw;
  lw.smoothness = 0.1;
  lw.mdh = 0.01;

  auto run = [&](bool with_grad) {
    Tape<double> tape;
    Var<double> l = tape.constant(left);
    Var<double> r = tape.constant(right);
    DisparityPair<double> d = forward(w, l, r);
    LossTerms<double> t = total_loss(l, r, d.left, d.right, lw, LossOptions{2});
    if (with_grad) {
      w.params.zero_grad();
      tape.backward(t.total);
    }
    return t.total.value()[0];
  };

  GradCheckResult res{"pipeline.micro"};
  run(true);
  std::vector<Tensor<double>> analytic;
  for (const Parameter<double>& p : w.params) analytic.push_back(p.grad);
  std::size_t k = 0;
  for (Parameter<double>& p : w.params) {
    const std::size_t per_param =
        options.max_entries == 0 ? 0 : std::max<std::size_t>(options.max_entries / 6, 4);
    for (std::size_t i : probe_indices(p.value.size(), per_param, rng)) {
      const double orig = p.value[i];
      p.value[i] = orig + options.step;
      const double up = run(false);
      p.value[i] = orig - options.step;
      const double down = run(false);
      p.value[i] = orig;
      record_error(res, analytic[k][i], (up - down) / (2 * options.step), options);
    }
    ++k;
  }
  res.passed = res.entries > 0 && res.max_rel_error < options.tolerance;
  return res;
}

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions& o) {
  Rng rng(o.seed);
  std::vector<GradCheckResult> out;
  using V = std::vector<Var<double>>;
  auto check = [&](const std::string& name, std::vector<Tensor<double>> in,
                   const GradFunction& f) {
    out.push_back(check_gradient(name, in, f, o));
  };
  const Shape s{3, 4, 2};

  check("add", {random_tensor(s, rng), random_tensor(s, rng)},
        [](V& x) { return add(x[0], x[1]); });
  check("sub", {random_tensor(s, rng), random_tensor(s, rng)},
        [](V& x) { return sub(x[0], x[1]); });
  check("mul", {random_tensor(s, rng), random_tensor(s, rng)},
        [](V& x) { return mul(x[0], x[1]); });
  check("div", {random_tensor(s, rng), signed_tensor(s, rng, 0.5, 2)},
        [](V& x) { return div(x[0], x[1]); });
  check("neg", {random_tensor(s, rng)}, [](V& x) { return neg(x[0]); });
  check("abs", {signed_tensor(s, rng)}, [](V& x) { return abs(x[0]); });
  check("exp", {random_tensor(s, rng)}, [](V& x) { return exp(x[0]); });
  check("relu", {signed_tensor(s, rng)}, [](V& x) { return relu(x[0]); });
  check("scale", {random_tensor(s, rng)}, [](V& x) { return scale(x[0], -2.5); });
  check("add_scalar", {random_tensor(s, rng)},
        [](V& x) { return add_scalar(x[0], 0.75); });
  check("sum", {random_tensor(s, rng)}, [](V& x) { return sum(x[0]); });
  check("mean", {random_tensor(s, rng)}, [](V& x) { return mean(x[0]); });
  for (std::size_t axis = 0; axis < 3; ++axis) {
    check("sum_axis" + std::to_string(axis), {random_tensor(s, rng)},
          [axis](V& x) { return sum_axis(x[0], axis); });
    check("mean_axis" + std::to_string(axis), {random_tensor(s, rng)},
          [axis](V& x) { return mean_axis(x[0], axis); });
    check("softmax" + std::to_string(axis), {random_tensor(s, rng, -2, 2)},
          [axis](V& x) { return softmax(x[0], axis); });
    check("repeat" + std::to_string(axis), {random_tensor(s, rng)},
          [axis](V& x) { return repeat(x[0], axis, 3); });
  }
  check("reshape", {random_tensor(s, rng)},
        [](V& x) { return reshape(x[0], Shape{6, 4}); });
  check("slice", {random_tensor(s, rng)}, [](V& x) { return slice(x[0], 1, 1, 3); });
  for (int order : {1, 2}) {
    for (SpatialAxis axis : {SpatialAxis::kU, SpatialAxis::kV}) {
      check("spatial_gradient" + std::to_string(order) +
                (axis == SpatialAxis::kU ? "u" : "v"),
            {random_tensor({4, 5, 2}, rng)},
            [order, axis](V& x) { return spatial_gradient(x[0], order, axis); });
    }
  }
  check("mean_pool3x3", {random_tensor({4, 5, 2}, rng)},
        [](V& x) { return mean_pool3x3(x[0]); });
  check("mean_pool3x3.2d", {random_tensor({4, 5}, rng)},
        [](V& x) { return mean_pool3x3(x[0]); });

  check("conv2d", {random_tensor({5, 6, 2}, rng), random_tensor({3, 3, 2, 3}, rng),
                   random_tensor({3}, rng)},
        [](V& x) { return conv2d(x[0], x[1], x[2]); });
  check("conv2d.stride2",
        {random_tensor({5, 6, 2}, rng), random_tensor({3, 3, 2, 3}, rng),
         random_tensor({3}, rng)},
        [](V& x) { return conv2d(x[0], x[1], x[2], 2); });
  check("conv2d.valid",
        {random_tensor({5, 6, 2}, rng), random_tensor({3, 3, 2, 2}, rng),
         random_tensor({2}, rng)},
        [](V& x) { return conv2d(x[0], x[1], x[2], 1, Padding::kValid); });
  check("conv2d.k5", {random_tensor({5, 6, 2}, rng), random_tensor({5, 5, 2, 2}, rng),
                      random_tensor({2}, rng)},
        [](V& x) { return conv2d(x[0], x[1], x[2]); });
  check("conv3d", {random_tensor({4, 4, 4, 2}, rng),
                   random_tensor({3, 3, 3, 2, 3}, rng), random_tensor({3}, rng)},
        [](V& x) { return conv3d(x[0], x[1], x[2]); });
  check("conv3d.stride2",
        {random_tensor({4, 6, 4, 2}, rng), random_tensor({3, 3, 3, 2, 3}, rng),
         random_tensor({3}, rng)},
        [](V& x) { return conv3d(x[0], x[1], x[2], 2); });
  check("deconv3d",
        {random_tensor({2, 3, 2, 3}, rng), random_tensor({3, 3, 3, 2, 3}, rng),
         random_tensor({2}, rng)},
        [](V& x) { return deconv3d(x[0], x[1], x[2]); });

  for (VolumeDirection dir :
       {VolumeDirection::kLeftToRight, VolumeDirection::kRightToLeft}) {
    check(dir == VolumeDirection::kLeftToRight ? "feature_volume.l2r"
                                               : "feature_volume.r2l",
          {random_tensor({3, 6, 2}, rng), random_tensor({3, 6, 2}, rng)},
          [dir](V& x) { return build_feature_volume(x[0], x[1], 3, dir); });
  }
  check("soft_argmin", {random_tensor({3, 4, 5}, rng, -2, 2)},
        [](V& x) { return soft_argmin(x[0]); });

  for (WarpDirection dir : {WarpDirection::kToLeft, WarpDirection::kToRight}) {
    check(dir == WarpDirection::kToLeft ? "warp.to_left" : "warp.to_right",
          {random_tensor({3, 10, 2}, rng, 0, 1),
           fractional_disparity({3, 10}, rng, 3)},
          [dir](V& x) { return warp(x[0], x[1], dir); });
  }
  check("ssim", {random_tensor({5, 6, 2}, rng, 0, 1), random_tensor({5, 6, 2}, rng, 0, 1)},
        [](V& x) { return ssim(x[0], x[1]); });
  check("unary_loss",
        {random_tensor({5, 8, 3}, rng, 0, 1), random_tensor({5, 8, 3}, rng, 0, 1)},
        [](V& x) { return unary_loss(x[0], x[1], LossWeights{}, ColumnWindow{2, 0}); });
  {
    const Tensor<double> image = random_tensor({6, 8, 3}, rng, 0, 1);
    check("smoothness_loss", {random_tensor({6, 8}, rng, 0, 4)},
          [image](V& x) {
            return smoothness_loss(x[0], x[0].tape->constant(image));
          });
  }
  for (Side side : {Side::kLeft, Side::kRight}) {
    check(side == Side::kLeft ? "loop_consistency.left" : "loop_consistency.right",
          {random_tensor({4, 12, 3}, rng, 0, 1), random_tensor({4, 12, 3}, rng, 0, 1),
           fractional_disparity({4, 12}, rng, 2), fractional_disparity({4, 12}, rng, 2)},
          [side](V& x) {
            return loop_consistency_loss(x[0], x[1], x[2], x[3], side,
                                         ColumnWindow{1, 11});
          });
  }
  check("mdh_loss", {random_tensor({4, 5}, rng, 0.1, 3)},
        [](V& x) { return mdh_loss(x[0]); });
  {
    const Tensor<double> left = random_tensor({6, 12, 3}, rng, 0, 1);
    const Tensor<double> right = random_tensor({6, 12, 3}, rng, 0, 1);
    LossWeights lw;
    lw.smoothness = 0.1;
    check("total_loss",
          {fractional_disparity({6, 12}, rng, 2), fractional_disparity({6, 12}, rng, 2)},
          [left, right, lw](V& x) {
            Tape<double>& t = *x[0].tape;
            return total_loss(t.constant(left), t.constant(right), x[0], x[1], lw,
                              LossOptions{2})
                .total;
          });
  }
  out.push_back(check_micro_pipeline(o));
  return out;
}

std::string format_gradcheck(const GradCheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s %s  entries=%-5zu max_rel=%.3e max_abs=%.3e",
                r.name.c_str(), r.passed ? "ok  " : "FAIL", r.entries,
                r.max_rel_error, r.max_abs_error);
  return buf;
}

}  // namespace sssm
