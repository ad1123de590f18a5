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
#include <gtest/gtest.h>

#include "sssm/conv.h"
#include "sssm/error.h"
#include "sssm/ops.h"
#include "test_util.h"

namespace sssm {
namespace {

using testing::random_tensor;

// Direct loop: zero same-padding, stride s.
Tensor<double> brute_conv2d(const Tensor<double>& x, const Tensor<double>& k,
                            const Tensor<double>& b, std::size_t s) {
  const std::size_t h = x.dim(0), w = x.dim(1), ci = x.dim(2);
  const std::size_t ks = k.dim(0), co = k.dim(3), r = ks / 2;
  const std::size_t oh = (h + s - 1) / s, ow = (w + s - 1) / s;
  Tensor<double> out({oh, ow, co});
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t xx = 0; xx < ow; ++xx)
      for (std::size_t o = 0; o < co; ++o) {
        double acc = b[o];
        for (std::size_t dy = 0; dy < ks; ++dy)
          for (std::size_t dx = 0; dx < ks; ++dx) {
            const long iy = static_cast<long>(y * s + dy) - static_cast<long>(r);
            const long ix = static_cast<long>(xx * s + dx) - static_cast<long>(r);
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
            for (std::size_t c = 0; c < ci; ++c) {
              acc += x.at(iy, ix, c) * k.at(dy, dx, c, o);
            }
          }
        out.at(y, xx, o) = acc;
      }
  return out;
}

Tensor<double> brute_conv3d(const Tensor<double>& x, const Tensor<double>& k,
                            const Tensor<double>& b, std::size_t s) {
  const std::size_t h = x.dim(0), w = x.dim(1), d = x.dim(2), ci = x.dim(3);
  const std::size_t co = k.dim(4);
  Tensor<double> out({h / s, w / s, d / s, co});
  for (std::size_t y = 0; y < h / s; ++y)
    for (std::size_t xx = 0; xx < w / s; ++xx)
      for (std::size_t z = 0; z < d / s; ++z)
        for (std::size_t o = 0; o < co; ++o) {
          double acc = b[o];
          for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx)
              for (int dz = 0; dz < 3; ++dz) {
                const long iy = static_cast<long>(y * s) + dy - 1;
                const long ix = static_cast<long>(xx * s) + dx - 1;
                const long iz = static_cast<long>(z * s) + dz - 1;
                if (iy < 0 || ix < 0 || iz < 0 || iy >= static_cast<long>(h) ||
                    ix >= static_cast<long>(w) || iz >= static_cast<long>(d))
                  continue;
                for (std::size_t c = 0; c < ci; ++c) {
                  acc += x.at(iy, ix, iz, c) * k.at(dy, dx, dz, c, o);
                }
              }
          out.at(y, xx, z, o) = acc;
        }
  return out;
}

void expect_near(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << i;
}

TEST(Conv2d, IdentityKernel) {
  Tape<float> tape;
  const Tensor<float> x = random_tensor({5, 7, 3}, 1);
  Tensor<float> k({1, 1, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) k.at(0, 0, c, c) = 1.0f;
  const Tensor<float> y =
      conv2d(tape.constant(x), tape.constant(k), tape.constant(Tensor<float>({3})))
          .value();
  EXPECT_TRUE(testing::bitwise_equal(x, y));
}

TEST(Conv2d, OnesCountOverlap) {
  Tape<float> tape;
  const Tensor<float> y =
      conv2d(tape.constant(Tensor<float>({5, 5, 1}, 1.0f)),
             tape.constant(Tensor<float>({3, 3, 1, 1}, 1.0f)),
             tape.constant(Tensor<float>({1})))
          .value();
  EXPECT_EQ(y.at(2, 2, 0), 9.0f);
  EXPECT_EQ(y.at(0, 0, 0), 4.0f);
  EXPECT_EQ(y.at(4, 4, 0), 4.0f);
  EXPECT_EQ(y.at(0, 2, 0), 6.0f);
}

TEST(Conv2d, MatchesBruteForce) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t ks : {1u, 3u, 5u}) {
      Tape<double> tape;
      const Tensor<double> x = random_tensor<double>({7, 9, 3}, 2 + ks);
      const Tensor<double> k = random_tensor<double>({ks, ks, 3, 4}, 3 + ks);
      const Tensor<double> b = random_tensor<double>({4}, 4);
      expect_near(conv2d(tape.constant(x), tape.constant(k), tape.constant(b), stride)
                      .value(),
                  brute_conv2d(x, k, b, stride), 1e-12);
    }
  }
}

TEST(Conv2d, ValidPadding) {
  Tape<double> tape;
  const Tensor<double> x = random_tensor<double>({6, 8, 2}, 5);
  const Tensor<double> k = random_tensor<double>({3, 3, 2, 3}, 6);
  const Tensor<double> b = random_tensor<double>({3}, 7);
  const Tensor<double> y =
      conv2d(tape.constant(x), tape.constant(k), tape.constant(b), 1, Padding::kValid)
          .value();
  ASSERT_EQ(y.shape(), (Shape{4, 6, 3}));
  const Tensor<double> same = brute_conv2d(x, k, b, 1);
  for (std::size_t v = 0; v < 4; ++v)
    for (std::size_t u = 0; u < 6; ++u)
      for (std::size_t o = 0; o < 3; ++o)
        EXPECT_NEAR(y.at(v, u, o), same.at(v + 1, u + 1, o), 1e-12);
}

TEST(Conv2d, ShapeErrors) {
  Tape<float> tape;
  Var<float> x = tape.constant(Tensor<float>({4, 4, 2}));
  Var<float> b = tape.constant(Tensor<float>({3}));
  EXPECT_THROW(conv2d(x, tape.constant(Tensor<float>({3, 3, 1, 3})), b), InvalidArgument);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor<float>({2, 2, 2, 3})), b), InvalidArgument);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor<float>({3, 3, 2, 3})), b, 0), InvalidArgument);
  EXPECT_THROW(conv2d(x, tape.constant(Tensor<float>({5, 5, 2, 3})), b, 1, Padding::kValid),
               InvalidArgument);
}

TEST(Conv3d, MatchesBruteForce) {
  for (std::size_t stride : {1u, 2u}) {
    Tape<double> tape;
    const Tensor<double> x = random_tensor<double>({4, 6, 8, 3}, 8);
    const Tensor<double> k = random_tensor<double>({3, 3, 3, 3, 2}, 9);
    const Tensor<double> b = random_tensor<double>({2}, 10);
    expect_near(
        conv3d(tape.constant(x), tape.constant(k), tape.constant(b), stride).value(),
        brute_conv3d(x, k, b, stride), 1e-12);
  }
}

TEST(Conv3d, IdentityAndShapes) {
  Tape<float> tape;
  const Tensor<float> x = random_tensor({4, 4, 4, 2}, 11);
  Tensor<float> k({3, 3, 3, 2, 2});
  k.at(1, 1, 1, 0, 0) = 1.0f;
  k.at(1, 1, 1, 1, 1) = 1.0f;
  Var<float> b = tape.constant(Tensor<float>({2}));
  EXPECT_TRUE(testing::bitwise_equal(
      conv3d(tape.constant(x), tape.constant(k), b).value(), x));
  const Tensor<float> y =
      conv3d(tape.constant(Tensor<float>({8, 8, 8, 1}, 1.0f)),
             tape.constant(Tensor<float>({3, 3, 3, 1, 5})),
             tape.constant(Tensor<float>({5})), 2)
          .value();
  EXPECT_EQ(y.shape(), (Shape{4, 4, 4, 5}));
  EXPECT_THROW(conv3d(tape.constant(Tensor<float>({5, 4, 4, 1})),
                      tape.constant(Tensor<float>({3, 3, 3, 1, 1})),
                      tape.constant(Tensor<float>({1})), 2),
               InvalidArgument);
}

TEST(Deconv3d, ShapeAndAdjoint) {
  Tape<double> tape;
  const Tensor<double> k = random_tensor<double>({3, 3, 3, 3, 5}, 12);
  const Tensor<double> zero_in({3}), zero_out({5});
  const Tensor<double> y_small = random_tensor<double>({4, 4, 4, 5}, 13);
  const Tensor<double> up =
      deconv3d(tape.constant(y_small), tape.constant(k), tape.constant(zero_in)).value();
  EXPECT_EQ(up.shape(), (Shape{8, 8, 8, 3}));

  // <conv(x), y> == <x, deconv(y)> with conv: 3 -> 5 channels, stride 2.
  const Tensor<double> x = random_tensor<double>({8, 8, 8, 3}, 14);
  const Tensor<double> cx =
      conv3d(tape.constant(x), tape.constant(k), tape.constant(zero_out), 2).value();
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx[i] * y_small[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * up[i];
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));

  // The same identity in 32-bit holds to the stated 1e-5.
  Tape<float> tf;
  const Tensor<float> xf = x.cast<float>(), yf = y_small.cast<float>(),
                      kf = k.cast<float>();
  const Tensor<float> cxf =
      conv3d(tf.constant(xf), tf.constant(kf), tf.constant(Tensor<float>({5})), 2).value();
  const Tensor<float> upf =
      deconv3d(tf.constant(yf), tf.constant(kf), tf.constant(Tensor<float>({3}))).value();
  double lf = 0, rf = 0;
  for (std::size_t i = 0; i < cxf.size(); ++i) lf += double(cxf[i]) * yf[i];
  for (std::size_t i = 0; i < xf.size(); ++i) rf += double(xf[i]) * upf[i];
  EXPECT_LT(std::abs(lf - rf) / std::abs(lf), 1e-5);
}

TEST(Deconv3d, EqualsConvInputGradient) {
  // deconv(y) is d<conv(x), y>/dx
  Tape<double> tape;
  const Tensor<double> k = random_tensor<double>({3, 3, 3, 2, 3}, 15);
  const Tensor<double> y = random_tensor<double>({2, 3, 2, 3}, 16);
  Var<double> x = tape.leaf(random_tensor<double>({4, 6, 4, 2}, 17));
  Var<double> c = conv3d(x, tape.constant(k), tape.constant(Tensor<double>({3})), 2);
  tape.backward(sum(mul(c, tape.constant(y))));
  Tape<double> t2;
  const Tensor<double> d =
      deconv3d(t2.constant(y), t2.constant(k), t2.constant(Tensor<double>({2}))).value();
  expect_near(*tape.grad(x), d, 1e-12);
}

}  // namespace
}  // namespace sssm
