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
#include "sssm/manifest.h"

#include <sstream>

#include "sssm/error.h"
#include "sssm/image_io.h"

namespace sssm {
namespace {

std::filesystem::path resolve(const std::filesystem::path& root,
                              const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : root / path;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    const std::size_t offset = pos;
    pos = eol + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream in(line);
    std::vector<std::string> fields;
    for (std::string f; in >> f;) fields.push_back(f);
    if (fields.empty()) continue;
    if (fields.size() < 2 || fields.size() > 4) {
      throw ParseError("manifest line needs 2 to 4 paths, got " +
                           std::to_string(fields.size()),
                       offset);
    }
    ManifestRecord r{resolve(root, fields[0]), resolve(root, fields[1]), {}, {}};
    if (fields.size() >= 3) r.gt = resolve(root, fields[2]);
    if (fields.size() == 4) r.mask = resolve(root, fields[3]);
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  DatasetManifest m;
  try {
    m = parse_manifest(text, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  }
  for (const ManifestRecord& r : m.records) {
    for (const auto* p : {&r.left, &r.right}) {
      if (!std::filesystem::exists(*p)) {
        throw IoError("manifest " + path.string() + " references missing file " +
                      p->string());
      }
    }
    for (const auto* p : {&r.gt, &r.mask}) {
      if (p->has_value() && !std::filesystem::exists(**p)) {
        throw IoError("manifest " + path.string() + " references missing file " +
                      (*p)->string());
      }
    }
    load_pair(r);
  }
  return m;
}

void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest) {
  std::string text;
  auto rel = [&](const std::filesystem::path& p) {
    return p.lexically_relative(manifest.root).generic_string();
  };
  for (const ManifestRecord& r : manifest.records) {
    text += rel(r.left) + " " + rel(r.right);
    if (r.gt) text += " " + rel(*r.gt);
    if (r.mask) text += " " + rel(*r.mask);
    text += '\n';
  }
  write_file(path, text);
}

StereoPair load_pair(const ManifestRecord& record) {
  StereoPair pair{read_image(record.left), read_image(record.right)};
  if (pair.left.shape() != pair.right.shape()) {
    throw InvalidArgument("left " + record.left.string() + " is " +
                          to_string(pair.left.shape()) + " but right " +
                          record.right.string() + " is " +
                          to_string(pair.right.shape()));
  }
  return pair;
}

DisparityGT load_gt(const ManifestRecord& record) {
  if (!record.gt) {
    throw InvalidArgument("record " + record.left.string() +
                          " has no ground truth");
  }
  DisparityGT gt = read_gt_disparity(*record.gt);
  if (record.mask) {
    const Tensor<float> mask = read_image(*record.mask);
    if (mask.dim(0) != gt.height() || mask.dim(1) != gt.width()) {
      throw InvalidArgument("mask " + record.mask->string() +
                            " does not match ground truth size");
    }
    gt.noc.assign(gt.values.size(), 0);
    for (std::size_t i = 0; i < gt.noc.size(); ++i) {
      gt.noc[i] = mask[i * 3] > 0.0f ? 1 : 0;
    }
  }
  return gt;
}

std::vector<StereoPair> load_pairs(const DatasetManifest& manifest) {
  std::vector<StereoPair> pairs;
  pairs.reserve(manifest.size());
  for (const ManifestRecord& r : manifest.records) pairs.push_back(load_pair(r));
  return pairs;
}

}  // namespace sssm
