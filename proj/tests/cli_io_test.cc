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
#include <cstdio>
#include <cstring>
#include <sstream>

#include <gtest/gtest.h>

#include "sssm/cli.h"
#include "sssm/config.h"
#include "sssm/error.h"
#include "sssm/image_io.h"
#include "sssm/manifest.h"
#include "sssm/synth.h"
#include "sssm/warp_loss.h"
#include "test_util.h"

namespace sssm {
namespace {

namespace fs = std::filesystem;
using testing::random_tensor;

int cli(std::vector<std::string> args, std::string* out = nullptr,
        std::string* err = nullptr) {
  args.insert(args.begin(), "sssm");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

Tensor<float> quantized_image(const Shape& shape, std::uint64_t seed) {
  Tensor<float> t = random_tensor(shape, seed, 0, 1);
  for (float& v : t.data()) v = std::round(v * 255.0f) / 255.0f;
  return t;
}

TEST(ImageIo, P6ScalesBytes) {
  const std::string bytes = std::string("P6\n2 2\n255\n") +
                            std::string("\x00\x00\x00\xff\xff\xff", 6) +
                            std::string("\x80\x00\xff\x01\x02\x03", 6);
  const Tensor<float> img = decode_image(bytes);
  ASSERT_EQ(img.shape(), (Shape{2, 2, 3}));
  EXPECT_EQ(img[0], 0.0f);
  EXPECT_EQ(img[3], 1.0f);
  EXPECT_EQ(img[6], 128.0f / 255.0f);
  EXPECT_EQ(encode_image(img), bytes);
}

TEST(ImageIo, P5ReplicatesChannels) {
  const std::string bytes = std::string("P5\n# comment\n3 1\n255\n") +
                            std::string("\x00\x40\xff", 3);
  const Tensor<float> img = decode_image(bytes);
  ASSERT_EQ(img.shape(), (Shape{1, 3, 3}));
  for (std::size_t u = 0; u < 3; ++u) {
    EXPECT_EQ(img.at(0, u, 0), img.at(0, u, 1));
    EXPECT_EQ(img.at(0, u, 0), img.at(0, u, 2));
  }
  EXPECT_EQ(img.at(0, 1, 0), 64.0f / 255.0f);
}

TEST(ImageIo, RoundTripIsByteIdentical) {
  const fs::path dir = testing::temp_dir("image_io");
  const Tensor<float> img = quantized_image({5, 7, 3}, 1);
  write_image(dir / "a.ppm", img);
  const Tensor<float> back = read_image(dir / "a.ppm");
  EXPECT_TRUE(testing::bitwise_equal(img, back));
  write_image(dir / "b.ppm", back);
  EXPECT_EQ(read_file(dir / "a.ppm"), read_file(dir / "b.ppm"));
  Tensor<float> gray = quantized_image({4, 6}, 2);
  write_image(dir / "g.pgm", gray);
  EXPECT_EQ(read_file(dir / "g.pgm").substr(0, 2), "P5");
}

TEST(ImageIo, ParseErrorsCarryOffsets) {
  try {
    decode_image("P6\n2 2\n255\n\x01\x02");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 13u);  // end of the truncated pixel data
  }
  EXPECT_THROW(decode_image("P3\n1 1\n255\n"), ParseError);
  EXPECT_THROW(decode_image("P6\n1 x\n255\n"), ParseError);
  EXPECT_THROW(decode_image("P6\n1 1\n65535\n\x01\x02"), ParseError);
  EXPECT_THROW(read_image("/nonexistent.ppm"), IoError);
}

TEST(GtDisparity, Examples) {
  const std::string bytes = std::string("P5\n2 1\n65535\n") +
                            std::string("\x02\x00\x00\x00", 4);
  const DisparityGT gt = decode_gt_disparity(bytes);
  EXPECT_EQ(gt.values[0], 2.0f);
  EXPECT_EQ(gt.valid[0], 1);
  EXPECT_EQ(gt.valid[1], 0);
  EXPECT_THROW(decode_gt_disparity("P5\n2 1\n255\n\x01\x02"), ParseError);
}

TEST(GtDisparity, QuantizationBound) {
  const fs::path dir = testing::temp_dir("gt");
  DisparityGT gt{random_tensor({9, 13}, 3, 0, 200), {}, {}};
  gt.valid.assign(gt.values.size(), 1);
  gt.valid[5] = 0;
  write_gt_disparity(dir / "gt.pgm", gt);
  const DisparityGT back = read_gt_disparity(dir / "gt.pgm");
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    EXPECT_EQ(back.valid[i], gt.valid[i]);
    if (gt.valid[i]) EXPECT_LE(std::abs(back.values[i] - gt.values[i]), 1.0 / 256);
  }
}

TEST(Pfm, Format) {
  const std::string b = encode_pfm(Tensor<float>({1, 1}, 3.5f));
  EXPECT_EQ(b, std::string("Pf\n1 1\n-1.0\n") + std::string("\x00\x00\x60\x40", 4));
  // bottom-up rows
  const std::string two = encode_pfm(Tensor<float>({2, 1}, {1.0f, 2.0f}));
  float first;
  std::memcpy(&first, two.data() + two.size() - 8, 4);
  EXPECT_EQ(first, 2.0f);
}

TEST(Pfm, RoundTripIsBitwise) {
  const fs::path dir = testing::temp_dir("pfm");
  const Tensor<float> d = random_tensor({6, 11}, 4, -100, 100);
  write_disparity_pfm(d, dir / "d.pfm");
  EXPECT_TRUE(testing::bitwise_equal(read_disparity_pfm(dir / "d.pfm"), d));
  EXPECT_THROW(decode_pfm("PF\n1 1\n-1.0\n"), ParseError);
}

TEST(Config, ParsesKnownKeysAndRejectsUnknown) {
  const RunConfig c = parse_run_config(
      "# comment\nfeature_dim = 8\n\n  learning_rate=0.5 # trailing\nseed = 42\n"
      "manifest = data/m.txt\n");
  EXPECT_EQ(c.net.feature_dim, 8);
  EXPECT_EQ(c.train.learning_rate, 0.5);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.manifest, fs::path("data/m.txt"));
  try {
    parse_run_config("feature_dim = 8\nbogus = 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 16u);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_run_config("feature_dim = eight\n"), ParseError);
  EXPECT_THROW(parse_run_config("feature_dim\n"), ParseError);
}

TEST(Config, FormatRoundTrips) {
  RunConfig c;
  c.apply_toy();
  c.train.learning_rate = 1.0 / 3.0;
  c.loss.mdh = 0.0123;
  c.out = "out dir";
  const RunConfig back = parse_run_config(format_run_config(c));
  EXPECT_EQ(format_run_config(back), format_run_config(c));
  EXPECT_EQ(back.train.learning_rate, c.train.learning_rate);
  const NetConfig net = parse_net_config(format_net_config(c.net));
  EXPECT_EQ(net.feature_dim, 16);
  EXPECT_EQ(net.restdm_scales, 2);
}

TEST(Synth, Examples) {
  SynthSpec spec;
  spec.disparity = 0;
  const SynthSample z = synth_pair(1, 16, 32, spec);
  EXPECT_TRUE(testing::bitwise_equal(z.pair.left, z.pair.right));
  for (float v : z.gt_left.values.data()) EXPECT_EQ(v, 0.0f);
  spec.disparity = 3;
  const SynthSample a = synth_pair(2, 16, 32, spec);
  const SynthSample b = synth_pair(2, 16, 32, spec);
  EXPECT_TRUE(testing::bitwise_equal(a.pair.left, b.pair.left));
  EXPECT_TRUE(testing::bitwise_equal(a.pair.right, b.pair.right));
  EXPECT_NO_THROW(a.pair.validate());
  spec.disparity = 8;  // not < W/4
  EXPECT_THROW(synth_pair(2, 16, 32, spec), InvalidArgument);
}

TEST(Synth, WarpReproducesOtherView) {
  for (DisparityPattern pattern :
       {DisparityPattern::kConstant, DisparityPattern::kPiecewisePlanar}) {
    SynthSpec spec;
    spec.pattern = pattern;
    spec.disparity = 5.5;
    const SynthSample s = synth_pair(3, 32, 64, spec);
    Tape<float> tape;
    const Tensor<float> rec =
        warp(tape.constant(s.pair.left), tape.constant(s.gt_right.values),
             WarpDirection::kToRight)
            .value();
    double acc = 0;
    std::size_t n = 0;
    for (std::size_t v = 0; v < 32; ++v)
      for (std::size_t u = 0; u < 64; ++u) {
        if (!s.gt_right.valid[v * 64 + u]) continue;
        for (std::size_t c = 0; c < 3; ++c)
          acc += std::abs(rec.at(v, u, c) - s.pair.right.at(v, u, c));
        n += 3;
      }
    ASSERT_GT(n, 0u);
    EXPECT_LT(acc / n, 1e-3);
  }
}

TEST(Manifest, OrderStableAndResolved) {
  const fs::path dir = testing::temp_dir("manifest");
  const Tensor<float> img = quantized_image({4, 8, 3}, 5);
  for (const char* n : {"a.ppm", "b.ppm", "c.ppm"}) write_image(dir / n, img);
  write_file(dir / "m.txt", "# pairs\nc.ppm a.ppm\na.ppm b.ppm\n\nb.ppm c.ppm\n");
  const DatasetManifest m = load_manifest(dir / "m.txt");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.records[0].left, dir / "c.ppm");
  EXPECT_EQ(m.records[1].right, dir / "b.ppm");
  EXPECT_EQ(m.records[2].left, dir / "b.ppm");
  write_file(dir / "bad.txt", "a.ppm missing.ppm\n");
  EXPECT_THROW(load_manifest(dir / "bad.txt"), IoError);
  write_image(dir / "small.ppm", quantized_image({4, 6, 3}, 6));
  write_file(dir / "mismatch.txt", "a.ppm small.ppm\n");
  EXPECT_THROW(load_manifest(dir / "mismatch.txt"), InvalidArgument);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"infer", "--no-such-flag"}), 2);
  EXPECT_EQ(cli({}), 2);
  EXPECT_EQ(cli({"--help"}), 0);
}

TEST(Cli, GradcheckPasses) {
  std::string out;
  EXPECT_EQ(cli({"gradcheck"}, &out), 0);
  EXPECT_NE(out.find("all passed"), std::string::npos);
}

TEST(Cli, InferWithMissingCheckpointNamesPath) {
  const fs::path dir = testing::temp_dir("cli_infer");
  const std::string missing = (dir / "nope.sssmw").string();
  std::string err;
  EXPECT_EQ(cli({"infer", "--toy", "--checkpoint", missing, "--out", dir.string(),
                 "a.ppm", "b.ppm"},
                nullptr, &err),
            1);
  EXPECT_NE(err.find(missing), std::string::npos);
}

TEST(Cli, BadConfigKeyIsRuntimeFailure) {
  const fs::path dir = testing::temp_dir("cli_cfg");
  write_file(dir / "run.cfg", "not_a_key = 3\n");
  std::string err;
  EXPECT_EQ(cli({"synth", "--config", (dir / "run.cfg").string(), "--out",
                 dir.string()},
                nullptr, &err),
            1);
  EXPECT_NE(err.find("not_a_key"), std::string::npos);
}

TEST(Cli, SynthInferEvalPipeline) {
  const fs::path dir = testing::temp_dir("cli_pipeline");
  const fs::path data = dir / "data";
  ASSERT_EQ(cli({"synth", "--out", data.string(), "--count", "2", "--height", "64",
                 "--width", "128", "--seed", "5", "--max-disparity", "6"}),
            0);
  const fs::path copy = dir / "copy";
  ASSERT_EQ(cli({"synth", "--out", copy.string(), "--count", "2", "--height", "64",
                 "--width", "128", "--seed", "5", "--max-disparity", "6"}),
            0);
  EXPECT_EQ(read_file(data / "000001_left.ppm"), read_file(copy / "000001_left.ppm"));
  EXPECT_EQ(read_file(data / "000001_gt.pgm"), read_file(copy / "000001_gt.pgm"));

  // Predictions equal to the ground truth report zero error.
  const DatasetManifest m = load_manifest(data / "manifest.txt");
  const fs::path pred = dir / "pred";
  fs::create_directories(pred);
  for (std::size_t i = 0; i < m.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu_left.pfm", i);
    write_disparity_pfm(read_gt_disparity(*m.records[i].gt).values, pred / name);
  }
  std::string out;
  ASSERT_EQ(cli({"eval", "--manifest", (data / "manifest.txt").string(), "--pred",
                 pred.string(), "--out", (dir / "eval").string()},
                &out),
            0);
  EXPECT_NE(out.find("D1(1.0px): 0.00%"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "eval" / "eval.csv"));

  // Frozen inference from a freshly initialized model is deterministic.
  const fs::path train = dir / "train";
  ASSERT_EQ(cli({"train", "--toy", "--manifest", (data / "manifest.txt").string(),
                 "--out", train.string(), "--iterations", "0", "--single-thread"}),
            0);
  for (const char* run : {"i1", "i2"}) {
    ASSERT_EQ(cli({"infer", "--checkpoint", (train / "model.sssmw").string(), "--manifest",
                   (data / "manifest.txt").string(), "--out", (dir / run).string()}),
              0);
  }
  EXPECT_EQ(read_file(dir / "i1" / "000001_right.pfm"),
            read_file(dir / "i2" / "000001_right.pfm"));
}

TEST(Cli, EvalWithoutGroundTruthFails) {
  const fs::path dir = testing::temp_dir("cli_empty");
  write_image(dir / "a.ppm", quantized_image({4, 8, 3}, 7));
  write_file(dir / "m.txt", "a.ppm a.ppm\n");
  fs::create_directories(dir / "pred");
  std::string err;
  EXPECT_EQ(cli({"eval", "--manifest", (dir / "m.txt").string(), "--pred",
                 (dir / "pred").string()},
                nullptr, &err),
            1);
  EXPECT_FALSE(err.empty());
}

}  // namespace
}  // namespace sssm
