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
#include <cmath>

#include <gtest/gtest.h>

#include "sssm/error.h"
#include "sssm/ops.h"
#include "sssm/synth.h"
#include "sssm/warp_loss.h"
#include "test_util.h"

namespace sssm {
namespace {

using testing::random_tensor;

double value(Var<double> v) { return v.value()[0]; }
float value(Var<float> v) { return v.value()[0]; }

// I_R(u) = T(u + pad), I_L(u) = T(u - k + pad) for a random texture T.
StereoPair shifted_pair(std::size_t h, std::size_t w, std::size_t k,
                        std::uint64_t seed) {
  const Tensor<float> t = random_tensor({h, w + k, 3}, seed, 0, 1);
  StereoPair p{Tensor<float>({h, w, 3}), Tensor<float>({h, w, 3})};
  for (std::size_t v = 0; v < h; ++v)
    for (std::size_t u = 0; u < w; ++u)
      for (std::size_t c = 0; c < 3; ++c) {
        p.right.at(v, u, c) = t.at(v, u + k, c);
        p.left.at(v, u, c) = t.at(v, u, c);
      }
  return p;
}

TEST(Warp, ZeroDisparityIsIdentity) {
  Tape<float> tape;
  const Tensor<float> src = random_tensor({5, 9, 3}, 1, 0, 1);
  Var<float> s = tape.constant(src);
  Var<float> d = tape.constant(Tensor<float>({5, 9}));
  EXPECT_TRUE(testing::bitwise_equal(warp(s, d, WarpDirection::kToLeft).value(), src));
  EXPECT_TRUE(testing::bitwise_equal(warp(s, d, WarpDirection::kToRight).value(), src));
}

TEST(Warp, IntegerShiftOnRamp) {
  Tape<float> tape;
  Tensor<float> ramp({3, 10, 1});
  for (std::size_t v = 0; v < 3; ++v)
    for (std::size_t u = 0; u < 10; ++u) ramp.at(v, u, 0) = 0.1f * u;
  Var<float> s = tape.constant(ramp);
  Var<float> d = tape.constant(Tensor<float>({3, 10}, 2.0f));
  const Tensor<float> left = warp(s, d, WarpDirection::kToLeft).value();
  const Tensor<float> right = warp(s, d, WarpDirection::kToRight).value();
  for (std::size_t v = 0; v < 3; ++v)
    for (std::size_t u = 0; u < 10; ++u) {
      EXPECT_EQ(left.at(v, u, 0), ramp.at(v, u < 2 ? 0 : u - 2, 0));
      EXPECT_EQ(right.at(v, u, 0), ramp.at(v, std::min<std::size_t>(u + 2, 9), 0));
    }
}

TEST(Warp, IntegerShiftReproducesShiftedPair) {
  const StereoPair p = shifted_pair(6, 20, 3, 2);
  Tape<float> tape;
  Var<float> d = tape.constant(Tensor<float>({6, 20}, 3.0f));
  const Tensor<float> rec_l =
      warp(tape.constant(p.right), d, WarpDirection::kToLeft).value();
  const Tensor<float> rec_r =
      warp(tape.constant(p.left), d, WarpDirection::kToRight).value();
  for (std::size_t v = 0; v < 6; ++v)
    for (std::size_t u = 0; u < 20; ++u)
      for (std::size_t c = 0; c < 3; ++c) {
        if (u >= 3) EXPECT_EQ(rec_l.at(v, u, c), p.left.at(v, u, c));
        if (u + 3 < 20) EXPECT_EQ(rec_r.at(v, u, c), p.right.at(v, u, c));
      }
}

TEST(Warp, Errors) {
  Tape<float> tape;
  Var<float> s = tape.constant(Tensor<float>({2, 4, 3}));
  EXPECT_THROW(warp(s, tape.constant(Tensor<float>({2, 4}, -0.5f)),
                    WarpDirection::kToLeft),
               InvalidArgument);
  EXPECT_THROW(warp(s, tape.constant(Tensor<float>({2, 5})), WarpDirection::kToLeft),
               InvalidArgument);
}

TEST(Ssim, Examples) {
  Tape<double> tape;
  const Tensor<double> x = random_tensor<double>({6, 7, 3}, 3, 0, 1);
  const Tensor<double> y = random_tensor<double>({6, 7, 3}, 4, 0, 1);
  for (double v : ssim(tape.constant(x), tape.constant(x)).value().data())
    EXPECT_NEAR(v, 1.0, 1e-6);
  const Tensor<double> xy = ssim(tape.constant(x), tape.constant(y)).value();
  const Tensor<double> yx = ssim(tape.constant(y), tape.constant(x)).value();
  for (std::size_t i = 0; i < xy.size(); ++i) {
    EXPECT_NEAR(xy[i], yx[i], 1e-6);
    EXPECT_GE(xy[i], -1.0);
    EXPECT_LE(xy[i], 1.0);
  }
  const Tensor<double> c = ssim(tape.constant(Tensor<double>({4, 4, 1}, 0.0)),
                                tape.constant(Tensor<double>({4, 4, 1}, 1.0)))
                               .value();
  const double expected = kSsimC1 / (1.0 + kSsimC1);
  for (double v : c.data()) EXPECT_NEAR(v, expected, 1e-12);
  EXPECT_NEAR(expected, 9.999e-5, 1e-8);
}

TEST(UnaryLoss, Examples) {
  Tape<double> tape;
  const Tensor<double> img = random_tensor<double>({6, 8, 3}, 5, 0, 1);
  EXPECT_NEAR(value(unary_loss(tape.constant(img), tape.constant(img))), 0.0, 1e-12);
  const double v = value(unary_loss(tape.constant(Tensor<double>({5, 5, 3}, 0.0)),
                                    tape.constant(Tensor<double>({5, 5, 3}, 1.0))));
  EXPECT_NEAR(v, 0.80 * (1 - kSsimC1 / (1 + kSsimC1)) / 2 + 0.15, 1e-12);
  EXPECT_NEAR(v, 0.54996, 1e-5);
}

TEST(UnaryLoss, DecreasesAlongInterpolationTowardTarget) {
  const Tensor<double> a = random_tensor<double>({8, 10, 3}, 6, 0, 1);
  const Tensor<double> b = random_tensor<double>({8, 10, 3}, 7, 0, 1);
  double prev = 1e9;
  for (int step = 0; step <= 10; ++step) {
    const double t = step / 10.0;
    Tensor<double> rec(a.shape());
    for (std::size_t i = 0; i < rec.size(); ++i) rec[i] = (1 - t) * b[i] + t * a[i];
    Tape<double> tape;
    const double loss = value(unary_loss(tape.constant(a), tape.constant(rec)));
    EXPECT_LT(loss, prev);
    EXPECT_GE(loss, 0.0);
    prev = loss;
  }
}

TEST(SmoothnessLoss, AffineFieldsCostNothing) {
  Tape<double> tape;
  const Tensor<double> img = random_tensor<double>({7, 9, 3}, 8, 0, 1);
  Tensor<double> d({7, 9});
  for (std::size_t v = 0; v < 7; ++v)
    for (std::size_t u = 0; u < 9; ++u) d.at(v, u) = 0.25 * u + 0.5 * v + 3.0;
  EXPECT_EQ(value(smoothness_loss(tape.constant(d), tape.constant(img))), 0.0);
  EXPECT_EQ(value(smoothness_loss(tape.constant(Tensor<double>({7, 9}, 4.2)),
                                  tape.constant(img))),
            0.0);
  // Non-dyadic slopes vanish up to rounding.
  for (std::size_t v = 0; v < 7; ++v)
    for (std::size_t u = 0; u < 9; ++u) d.at(v, u) = 0.3 * u - 0.7 * v + 11.1;
  EXPECT_LT(value(smoothness_loss(tape.constant(d), tape.constant(img))), 1e-12);
}

TEST(SmoothnessLoss, EdgeAlignedStepIsCheaper) {
  Tape<double> tape;
  Tensor<double> d({6, 10}), flat({6, 10, 3}, 0.5), edge({6, 10, 3}, 0.1);
  for (std::size_t v = 0; v < 6; ++v)
    for (std::size_t u = 0; u < 10; ++u) {
      d.at(v, u) = u >= 5 ? 4.0 : 1.0;
      for (std::size_t c = 0; c < 3; ++c) edge.at(v, u, c) = u >= 5 ? 0.9 : 0.1;
    }
  const double on_flat = value(smoothness_loss(tape.constant(d), tape.constant(flat)));
  const double on_edge = value(smoothness_loss(tape.constant(d), tape.constant(edge)));
  EXPECT_GT(on_flat, 0.0);
  EXPECT_LT(on_edge, on_flat);
}

TEST(LoopConsistency, Examples) {
  Tape<float> tape;
  const StereoPair p = shifted_pair(5, 24, 4, 9);
  Var<float> l = tape.constant(p.left), r = tape.constant(p.right);
  Var<float> zero = tape.constant(Tensor<float>({5, 24}));
  EXPECT_EQ(value(loop_consistency_loss(l, l, zero, zero, Side::kLeft)), 0.0f);
  EXPECT_EQ(value(loop_consistency_loss(r, r, zero, zero, Side::kRight)), 0.0f);
  Var<float> k = tape.constant(Tensor<float>({5, 24}, 4.0f));
  EXPECT_EQ(value(loop_consistency_loss(l, r, k, k, Side::kLeft, left_window(24, 4))),
            0.0f);
  EXPECT_EQ(value(loop_consistency_loss(l, r, k, k, Side::kRight, right_window(24, 4))),
            0.0f);
  EXPECT_GT(value(loop_consistency_loss(l, r, zero, k, Side::kLeft)), 0.0f);
}

TEST(MdhLoss, Examples) {
  Tape<double> tape;
  EXPECT_EQ(value(mdh_loss(tape.constant(Tensor<double>({3, 4})))), 0.0);
  EXPECT_EQ(value(mdh_loss(tape.constant(Tensor<double>({3, 4}, 5.0)))), 5.0);
  const Tensor<double> d = random_tensor<double>({5, 7}, 10, 0, 9);
  double acc = 0;
  for (double v : d.data()) acc += v;
  EXPECT_NEAR(value(mdh_loss(tape.constant(d))), acc / d.size(), 1e-12);
}

TEST(TotalLoss, PerfectReconstructionIsZero) {
  Tape<float> tape;
  const Tensor<float> img = random_tensor({6, 12, 3}, 11, 0, 1);
  Var<float> i = tape.constant(img);
  Var<float> z = tape.constant(Tensor<float>({6, 12}));
  LossWeights w;
  w.mdh = 0;
  const LossReport r = total_loss(i, i, z, z, w).report();
  EXPECT_EQ(r.total, 0.0);
}

TEST(TotalLoss, EqualsWeightedSumOfParts) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Tape<float> tape;
    const StereoPair p = shifted_pair(8, 24, 3, 20 + seed);
    const LossWeights w;  // 0.80/0.15/0.15, w_c = 1, w_m = 0.001
    const LossTerms<float> t =
        total_loss(tape.constant(p.left), tape.constant(p.right),
                   tape.constant(random_tensor({8, 24}, 30 + seed, 0, 6)),
                   tape.constant(random_tensor({8, 24}, 40 + seed, 0, 6)), w,
                   LossOptions{3});
    const LossReport r = t.report();
    EXPECT_NEAR(r.total, r.weighted_sum(w), 1e-6);
    for (double part : {r.unary_l, r.unary_r, r.smooth_l, r.smooth_r, r.loop_l,
                        r.loop_r, r.mdh_l, r.mdh_r})
      EXPECT_GE(part, 0.0);
  }
}

TEST(TotalLoss, NonFiniteTermIsNamed) {
  Tape<float> tape;
  const StereoPair p = shifted_pair(6, 12, 2, 50);
  Tensor<float> wild({6, 12});
  for (std::size_t i = 0; i < wild.size(); ++i) wild[i] = i % 2 ? 3e38f : 0.0f;
  try {
    total_loss(tape.constant(p.left), tape.constant(p.right), tape.constant(wild),
               tape.constant(Tensor<float>({6, 12})), LossWeights{});
    FAIL() << "expected a non-finite loss";
  } catch (const LossTermError& e) {
    EXPECT_EQ(e.term(), "smooth_l");
    EXPECT_GT(e.partial().unary_l, 0.0);
    EXPECT_NE(std::string(e.what()).find("smooth_l"), std::string::npos);
  }
}

TEST(LossWeights, RejectNegative) {
  LossWeights w;
  w.mdh = -1;
  EXPECT_THROW(w.validate(), InvalidArgument);
}

}  // namespace
}  // namespace sssm
