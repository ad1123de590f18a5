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
#include <sstream>

#include <gtest/gtest.h>

#include "sssm/checkpoint.h"
#include "sssm/synth.h"
#include "sssm/trainer.h"
#include "test_util.h"

namespace sssm {
namespace {

NetConfig tiny_net() {
  NetConfig c;
  c.feature_layers = 2;
  c.feature_dim = 4;
  c.skip_every = 2;
  c.disparity_range = 3;
  c.restdm_scales = 1;
  return c;
}

TrainConfig tiny_train(int iterations) {
  TrainConfig t;
  t.crop_height = 8;
  t.crop_width = 16;
  t.max_iterations = iterations;
  t.smoothness_switch_iteration = iterations;
  t.lr_drop_iteration = iterations;
  t.border_margin = 2;
  t.seed = 3;
  return t;
}

std::vector<StereoPair> tiny_dataset(std::size_t n, std::uint64_t seed) {
  SynthSpec spec;
  spec.min_disparity = 1;
  spec.max_disparity = 3;
  std::vector<StereoPair> out;
  for (const SynthSample& s : synth_dataset(seed, n, 12, 24, spec)) {
    out.push_back(s.pair);
  }
  return out;
}

std::string log_text(const std::vector<LogRow>& rows) {
  std::ostringstream s;
  write_loss_log(s, rows);
  return s.str();
}

TEST(RmsProp, MatchesClosedFormOnSquare) {
  ParameterSet<float> ps;
  ps.add("p", Tensor<float>(Shape{1}, 1.0f));
  RmsProp opt(0.9, 1e-8);
  double p = 1.0, acc = 0.0;
  for (int k = 0; k < 5; ++k) {
    ps.get("p").grad = Tensor<float>(Shape{1}, static_cast<float>(2 * ps.get("p").value[0]));
    const double g = 2 * p;
    acc = 0.9 * acc + 0.1 * g * g;
    p -= 0.1 * g / std::sqrt(acc + 1e-8);
    opt.step(ps, 0.1);
    EXPECT_NEAR(ps.get("p").value[0], p, 1e-6) << "step " << k;
  }
  // First step: p1 = 1 - 0.1 * 2 / sqrt(0.4)
  ParameterSet<float> q;
  q.add("p", Tensor<float>(Shape{1}, 1.0f));
  q.get("p").grad = Tensor<float>(Shape{1}, 2.0f);
  RmsProp fresh;
  fresh.step(q, 0.1);
  EXPECT_NEAR(q.get("p").value[0], 1 - 0.2 / std::sqrt(0.4), 1e-7);
  EXPECT_EQ(fresh.iteration(), 1);
}

TEST(RmsProp, ZeroGradientLeavesWeightsUnchanged) {
  ParameterSet<float> ps;
  ps.add("w", testing::random_tensor({3, 4}, 1));
  const Tensor<float> before = ps.get("w").value;
  ps.zero_grad();
  RmsProp opt;
  for (int k = 0; k < 3; ++k) opt.step(ps, 0.5);
  EXPECT_TRUE(testing::bitwise_equal(ps.get("w").value, before));
}

TEST(RmsProp, StateRoundTrip) {
  ParameterSet<float> ps;
  ps.add("w", testing::random_tensor({2, 2}, 2));
  ps.get("w").grad = testing::random_tensor({2, 2}, 3);
  RmsProp opt;
  opt.step(ps, 0.01);
  ParameterSet<float> state;
  opt.export_state(state);
  EXPECT_TRUE(state.contains("rmsprop/w"));
  RmsProp back;
  back.import_state(decode_checkpoint(encode_checkpoint(state)));
  EXPECT_EQ(back.iteration(), 1);
  EXPECT_TRUE(testing::bitwise_equal(back.accumulators().at("w"),
                                     opt.accumulators().at("w")));
  ParameterSet<float> junk;
  junk.add("other", Tensor<float>(Shape{1}));
  EXPECT_THROW(back.import_state(junk), InvalidArgument);
}

TEST(TrainConfig, Schedules) {
  TrainConfig t;
  EXPECT_EQ(t.lr_at(0), 1e-3);
  EXPECT_EQ(t.lr_at(4999), 1e-3);
  EXPECT_EQ(t.lr_at(5000), 1e-4);
  EXPECT_EQ(t.smoothness_at(4999), 0.001);
  EXPECT_EQ(t.smoothness_at(5000), 0.1);
  EXPECT_NO_THROW(t.validate());
  t.smoothness_switch_iteration = t.max_iterations + 1;
  EXPECT_THROW(t.validate(), InvalidArgument);
  TrainConfig bad;
  bad.rmsprop_decay = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Trainer, SeededRunsAreBitwiseIdentical) {
  const auto data = tiny_dataset(3, 1);
  const TrainConfig t = tiny_train(4);
  const TrainResult a = train_from_scratch(data, tiny_net(), t, {});
  const TrainResult b = train_from_scratch(data, tiny_net(), t, {});
  ASSERT_EQ(a.log.size(), 4u);
  EXPECT_EQ(log_text(a.log), log_text(b.log));
  EXPECT_EQ(encode_checkpoint(a.weights.params), encode_checkpoint(b.weights.params));
  // The log has a header plus one row per iteration.
  const std::string text = log_text(a.log);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  const auto data = tiny_dataset(3, 2);
  const TrainResult full = train_from_scratch(data, tiny_net(), tiny_train(4), {});

  // Iterations 0 and 1 follow the same schedule in both configs.
  TrainConfig first = tiny_train(4);
  first.max_iterations = 2;
  first.smoothness_switch_iteration = 2;
  const TrainResult part = train_from_scratch(data, tiny_net(), first, {});

  // Persist and reload weights and optimizer state.
  ParameterSet<float> opt_state;
  part.optimizer.export_state(opt_state);
  TrainResult resumed{NetworkWeights<float>{tiny_net(), {}}, RmsProp(), part.log};
  resumed.weights.params = decode_checkpoint(encode_checkpoint(part.weights.params));
  resumed.optimizer.import_state(decode_checkpoint(encode_checkpoint(opt_state)));
  continue_training(resumed, data, tiny_train(4), {});

  EXPECT_EQ(encode_checkpoint(resumed.weights.params),
            encode_checkpoint(full.weights.params));
  EXPECT_EQ(log_text(resumed.log), log_text(full.log));
}

TEST(Trainer, PeriodicCheckpoints) {
  const auto dir = testing::temp_dir("trainer_ckpt");
  TrainConfig t = tiny_train(4);
  t.checkpoint_every = 2;
  TrainHooks hooks;
  hooks.checkpoint_dir = dir;
  int steps = 0;
  hooks.on_step = [&](const StepResult& r) { EXPECT_EQ(r.iteration, steps++); };
  const TrainResult r = train_from_scratch(tiny_dataset(2, 3), tiny_net(), t, {}, hooks);
  EXPECT_EQ(steps, 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_000002.sssmw"));
  EXPECT_TRUE(std::filesystem::exists(dir / "optimizer_000004.sssmw"));
  EXPECT_EQ(encode_checkpoint(load_checkpoint(dir / "checkpoint_000004.sssmw")),
            encode_checkpoint(r.weights.params));
}

TEST(Trainer, CropErrors) {
  const auto data = tiny_dataset(1, 4);
  EXPECT_THROW(random_crop(data[0], 13, 8, 1), InvalidArgument);
  EXPECT_THROW(random_crop(data[0], 8, 25, 1), InvalidArgument);
  TrainConfig t = tiny_train(1);
  t.crop_height = 16;
  EXPECT_THROW(train_from_scratch(data, tiny_net(), t, {}), InvalidArgument);
  t = tiny_train(1);
  t.crop_width = 15;  // not aligned
  EXPECT_THROW(train_from_scratch(data, tiny_net(), t, {}), InvalidArgument);
  EXPECT_THROW(train_from_scratch({}, tiny_net(), tiny_train(1), {}), InvalidArgument);
}

TEST(Trainer, CropIsASubwindow) {
  const auto data = tiny_dataset(1, 5);
  const StereoPair c = random_crop(data[0], 4, 8, 9);
  bool found = false;
  for (std::size_t top = 0; top + 4 <= 12 && !found; ++top)
    for (std::size_t left = 0; left + 8 <= 24 && !found; ++left) {
      bool same = true;
      for (std::size_t v = 0; v < 4 && same; ++v)
        for (std::size_t u = 0; u < 8 && same; ++u)
          for (std::size_t k = 0; k < 3; ++k)
            same = same && c.left.at(v, u, k) == data[0].left.at(top + v, left + u, k) &&
                   c.right.at(v, u, k) == data[0].right.at(top + v, left + u, k);
      found = same;
    }
  EXPECT_TRUE(found);
}

TEST(Trainer, DivergenceIsReported) {
  auto data = tiny_dataset(1, 6);
  NetworkWeights<float> w = init_weights(tiny_net(), 1);
  for (Parameter<float>& p : w.params) {
    if (p.name == "feature.conv0.weight") p.value[0] = std::nanf("");
  }
  RmsProp opt;
  const StereoPair crop = random_crop(data[0], 8, 16, 1);
  EXPECT_THROW(train_step(w, crop, tiny_train(1), {}, opt), TrainingDiverged);
  EXPECT_EQ(opt.iteration(), 0);
}

TEST(Trainer, StepWithZeroLearningRateKeepsWeights) {
  auto data = tiny_dataset(1, 7);
  NetworkWeights<float> w = init_weights(tiny_net(), 2);
  const std::string before = encode_checkpoint(w.params);
  TrainConfig t = tiny_train(1);
  t.learning_rate = 0;
  t.learning_rate_late = 0;
  RmsProp opt;
  const StepResult r = train_step(w, random_crop(data[0], 8, 16, 2), t, {}, opt);
  EXPECT_EQ(encode_checkpoint(w.params), before);
  EXPECT_TRUE(std::isfinite(r.loss.total));
  EXPECT_GE(r.warp_error, 0.0);
}

TEST(Infer, PadsToAlignmentAndCropsBack) {
  auto data = tiny_dataset(1, 8);
  const NetworkWeights<float> w = init_weights(tiny_net(), 3);
  const Prediction full = infer(w, data[0]);
  EXPECT_EQ(full.d_left.shape(), (Shape{12, 24}));

  // An aligned input matches a direct forward pass.
  NetworkWeights<float> copy = w;
  Tape<float> tape;
  DisparityPair<float> d =
      forward(copy, tape.constant(data[0].left), tape.constant(data[0].right));
  EXPECT_TRUE(testing::bitwise_equal(full.d_left, d.left.value()));
  EXPECT_TRUE(testing::bitwise_equal(full.d_right, d.right.value()));

  const StereoPair odd = random_crop(data[0], 11, 23, 4);
  const Prediction p = infer(w, odd);
  EXPECT_EQ(p.d_left.shape(), (Shape{11, 23}));
  EXPECT_EQ(p.d_right.shape(), (Shape{11, 23}));
  for (float v : p.d_left.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 3.0f);
  }
}

TEST(OnlineAdapt, ZeroLearningRateEqualsFrozenInference) {
  const auto stream = tiny_dataset(3, 9);
  NetworkWeights<float> w = init_weights(tiny_net(), 4);
  const NetworkWeights<float> frozen = w;
  TrainConfig t = tiny_train(1);
  t.learning_rate = 0;
  t.learning_rate_late = 0;
  RmsProp opt;
  const auto results = online_adapt(w, opt, stream, t, {});
  ASSERT_EQ(results.size(), 3u);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Prediction p = infer(frozen, stream[i]);
    EXPECT_TRUE(testing::bitwise_equal(results[i].prediction.d_left, p.d_left));
    EXPECT_TRUE(testing::bitwise_equal(results[i].prediction.d_right, p.d_right));
  }
}

TEST(OnlineAdapt, PredictionPrecedesUpdate) {
  const auto stream = tiny_dataset(2, 10);
  NetworkWeights<float> w = init_weights(tiny_net(), 5);
  const NetworkWeights<float> start = w;
  TrainConfig t = tiny_train(1);
  t.learning_rate = 0;  // adaptation runs at the late rate
  t.learning_rate_late = 1e-2;
  RmsProp opt;
  std::vector<std::size_t> seen;
  const auto results = online_adapt(
      w, opt, stream, t, {},
      [&](std::size_t i, const AdaptResult&) { seen.push_back(i); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1}));
  // The first prediction comes from the initial weights.
  EXPECT_TRUE(testing::bitwise_equal(results[0].prediction.d_left,
                                     infer(start, stream[0]).d_left));
  // The weights have moved, and the second prediction used the moved ones.
  EXPECT_NE(encode_checkpoint(w.params), encode_checkpoint(start.params));
  EXPECT_FALSE(testing::bitwise_equal(results[1].prediction.d_left,
                                      infer(start, stream[1]).d_left));
  EXPECT_EQ(opt.iteration(), 2);
}

TEST(OnlineAdapt, RejectsUnalignedPairs) {
  auto stream = tiny_dataset(1, 11);
  stream[0] = random_crop(stream[0], 11, 24, 1);
  NetworkWeights<float> w = init_weights(tiny_net(), 6);
  RmsProp opt;
  EXPECT_THROW(online_adapt(w, opt, stream, tiny_train(1), {}), InvalidArgument);
}

}  // namespace
}  // namespace sssm
