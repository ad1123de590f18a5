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
#ifndef SSSM_GRADCHECK_H_
#define SSSM_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sssm/autodiff.h"

namespace sssm {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // |a - n| / max(|a|, |n|, floor)
  double floor = 1e-4;
  // Entries probed per input tensor; 0 probes every entry.
  std::size_t max_entries = 48;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
  bool passed = false;
};

// f builds an output from leaves bound to `inputs`. The probe is
// L = sum(f(x) * R) with a fixed random R; analytic dL/dx from the tape is
// compared against central differences.
using GradFunction =
    std::function<Var<double>(std::vector<Var<double>>& inputs)>;

GradCheckResult check_gradient(const std::string& name,
                               const std::vector<Tensor<double>>& inputs,
                               const GradFunction& f,
                               const GradCheckOptions& options = {});

// Every differentiable operation plus the micro pipeline (8x16 images, D=4,
// F=4) checked end to end through all parameters.
std::vector<GradCheckResult> run_gradcheck_suite(
    const GradCheckOptions& options = {});

// The end-to-end case alone.
GradCheckResult check_micro_pipeline(const GradCheckOptions& options = {});

std::string format_gradcheck(const GradCheckResult& r);

}  // namespace sssm

#endif  // SSSM_GRADCHECK_H_
