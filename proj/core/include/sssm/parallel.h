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
#ifndef SSSM_PARALLEL_H_
#define SSSM_PARALLEL_H_

namespace sssm {

// Number of threads the GEMM kernels may use. 1 gives bitwise-reproducible
// results; larger values are still deterministic for a fixed count.
void set_num_threads(int n);
int num_threads();

}  // namespace sssm

#endif  // SSSM_PARALLEL_H_
