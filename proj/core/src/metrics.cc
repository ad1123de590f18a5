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
#include "sssm/metrics.h"

#include <cmath>
#include <cstdio>

#include "sssm/autodiff.h"
#include "sssm/ops.h"

namespace sssm {
namespace {

void check_shapes(const Tensor<float>& pred, const DisparityGT& gt) {
  if (pred.rank() != 2 || pred.shape() != gt.values.shape()) {
    throw InvalidArgument("prediction " + to_string(pred.shape()) +
                          " does not match ground truth " +
                          to_string(gt.values.shape()));
  }
  if (gt.valid.size() != gt.values.size()) {
    throw InvalidArgument("ground-truth mask size does not match values");
  }
  if (!gt.noc.empty() && gt.noc.size() != gt.values.size()) {
    throw InvalidArgument("non-occluded mask size does not match values");
  }
}

bool counted(const DisparityGT& gt, std::size_t i, PixelSet pixels) {
  if (!gt.valid[i]) return false;
  return pixels == PixelSet::kAll || gt.noc.empty() || gt.noc[i];
}

}  // namespace

std::size_t DisparityGT::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  return n;
}

double d1_error(const Tensor<float>& pred, const DisparityGT& gt,
                double threshold_px, bool relative, PixelSet pixels) {
  check_shapes(pred, gt);
  if (!(threshold_px > 0)) throw InvalidArgument("d1 threshold must be > 0");
  std::size_t n = 0, bad = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!counted(gt, i, pixels)) continue;
    ++n;
    const double g = gt.values[i];
    const double err = std::abs(static_cast<double>(pred[i]) - g);
    if (err > threshold_px && (!relative || err > 0.05 * std::abs(g))) ++bad;
  }
  if (n == 0) throw EmptyEvaluation("no valid ground-truth pixels");
  return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

double epe(const Tensor<float>& pred, const DisparityGT& gt, PixelSet pixels) {
  check_shapes(pred, gt);
  std::size_t n = 0;
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!counted(gt, i, pixels)) continue;
    ++n;
    total += std::abs(static_cast<double>(pred[i]) - gt.values[i]);
  }
  if (n == 0) throw EmptyEvaluation("no valid ground-truth pixels");
  return total / static_cast<double>(n);
}

double warping_error(const StereoPair& pair, const Tensor<float>& d_left,
                     const Tensor<float>& d_right, std::size_t border_margin) {
  Tape<float> tape;
  Var<float> l = tape.constant(pair.left);
  Var<float> r = tape.constant(pair.right);
  Var<float> dl = tape.constant(d_left);
  Var<float> dr = tape.constant(d_right);
  const std::size_t w = pair.width();
  auto side_error = [&](Var<float> image, Var<float> rec, ColumnWindow win) {
    Var<float> err = abs(sub(image, rec));
    return static_cast<double>(
        mean(slice(err, 1, win.begin, win.end)).value()[0]);
  };
  const double e_l = side_error(l, warp(r, dl, WarpDirection::kToLeft),
                                left_window(w, border_margin));
  const double e_r = side_error(r, warp(l, dr, WarpDirection::kToRight),
                                right_window(w, border_margin));
  return 0.5 * (e_l + e_r);
}

EvalReport evaluate(const Tensor<float>& pred, const DisparityGT& gt,
                    PixelSet pixels) {
  EvalReport r;
  r.d1_0_5 = d1_error(pred, gt, 0.5, false, pixels);
  r.d1_1 = d1_error(pred, gt, 1.0, false, pixels);
  r.d1_3 = d1_error(pred, gt, 3.0, true, pixels);
  r.epe = epe(pred, gt, pixels);
  r.total_pixels = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    r.valid_pixels += counted(gt, i, pixels) ? 1 : 0;
  }
  return r;
}

EvalReport aggregate(const std::vector<EvalReport>& reports) {
  EvalReport out;
  double warp_sum = 0;
  std::size_t warp_n = 0;
  for (const auto& r : reports) {
    const auto n = static_cast<double>(r.valid_pixels);
    out.d1_0_5 += r.d1_0_5 * n;
    out.d1_1 += r.d1_1 * n;
    out.d1_3 += r.d1_3 * n;
    out.epe += r.epe * n;
    out.valid_pixels += r.valid_pixels;
    out.total_pixels += r.total_pixels;
    if (r.warp_error >= 0) {
      warp_sum += r.warp_error;
      ++warp_n;
    }
  }
  if (out.valid_pixels == 0) throw EmptyEvaluation("evaluation set is empty");
  const auto n = static_cast<double>(out.valid_pixels);
  out.d1_0_5 /= n;
  out.d1_1 /= n;
  out.d1_3 /= n;
  out.epe /= n;
  out.warp_error = warp_n ? warp_sum / static_cast<double>(warp_n) : -1;
  return out;
}

std::string EvalReport::csv_header() {
  return "d1_0.5px,d1_1px,d1_3px,epe,warp_error,valid_pixels,total_pixels";
}

std::string EvalReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu", d1_0_5,
                d1_1, d1_3, epe, warp_error, valid_pixels, total_pixels);
  return buf;
}

std::string EvalReport::to_text() const {
  char buf[512];
  int n = std::snprintf(buf, sizeof(buf),
                        "D1(0.5px): %.2f%%\nD1(1.0px): %.2f%%\n"
                        "D1(3.0px): %.2f%%\nEPE: %.4f px\n",
                        d1_0_5, d1_1, d1_3, epe);
  if (warp_error >= 0) {
    n += std::snprintf(buf + n, sizeof(buf) - static_cast<std::size_t>(n),
                       "Warping error: %.6f\n", warp_error);
  }
  std::snprintf(buf + n, sizeof(buf) - static_cast<std::size_t>(n),
                "Valid pixels: %zu / %zu\n", valid_pixels, total_pixels);
  return buf;
}

}  // namespace sssm
