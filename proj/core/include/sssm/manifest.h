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
#ifndef SSSM_MANIFEST_H_
#define SSSM_MANIFEST_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sssm/metrics.h"
#include "sssm/warp_loss.h"

namespace sssm {

struct ManifestRecord {
  std::filesystem::path left;
  std::filesystem::path right;
  std::optional<std::filesystem::path> gt;
  // 8-bit PGM, nonzero marks non-occluded pixels.
  std::optional<std::filesystem::path> mask;
};

// One record per line: "left right [gt [mask]]", whitespace separated, '#'
// comments. Relative paths resolve against the manifest's directory. Order
// is preserved.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
};

DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& root);
// Parses and checks that every referenced file exists and that left and
// right dimensions agree.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);

StereoPair load_pair(const ManifestRecord& record);
// Requires record.gt; attaches the mask as the non-occluded set if present.
DisparityGT load_gt(const ManifestRecord& record);

std::vector<StereoPair> load_pairs(const DatasetManifest& manifest);

}  // namespace sssm

#endif  // SSSM_MANIFEST_H_
