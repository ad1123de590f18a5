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
#ifndef SSSM_CHECKPOINT_H_
#define SSSM_CHECKPOINT_H_

#include <filesystem>
#include <string>

#include "sssm/autodiff.h"

namespace sssm {

// SSSMW1 parameter checkpoint:
//   "SSSMW1\n"
//   repeated until EOF:
//     u32 name_length, name bytes, u32 rank, u32 extent[rank],
//     float32 value[prod(extent)]
// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[] = "SSSMW1\n";

std::string encode_checkpoint(const ParameterSet<float>& params);
ParameterSet<float> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ParameterSet<float>& params,
                     const std::filesystem::path& path);
// Throws IoError naming the path if it cannot be opened.
ParameterSet<float> load_checkpoint(const std::filesystem::path& path);

// Copies values from `source` into `target` by name. Every parameter in
// `target` must be present with an identical shape; extra records in
// `source` are ignored when `allow_extra` is set.
void assign_parameters(ParameterSet<float>& target,
                       const ParameterSet<float>& source,
                       bool allow_extra = false);

}  // namespace sssm

#endif  // SSSM_CHECKPOINT_H_
