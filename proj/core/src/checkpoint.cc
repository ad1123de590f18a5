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
#include "sssm/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sssm/error.h"

namespace sssm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void floats(float* dst, std::size_t n, const char* what) {
    need(n * 4, what);
    std::memcpy(dst, bytes_.data() + pos_, n * 4);
    pos_ += n * 4;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("checkpoint truncated while reading ") +
                           what,
                       pos_);
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParameterSet<float>& params) {
  std::string out(kCheckpointMagic);
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t e : p.value.shape()) {
      put_u32(out, static_cast<std::uint32_t>(e));
    }
    out.append(reinterpret_cast<const char*>(p.value.ptr()),
               p.value.size() * sizeof(float));
  }
  return out;
}

ParameterSet<float> decode_checkpoint(const std::string& bytes) {
  const std::string magic(kCheckpointMagic);
  if (bytes.compare(0, magic.size(), magic) != 0) {
    throw ParseError("missing SSSMW1 magic", 0);
  }
  Reader r(bytes);
  r.str(magic.size(), "magic");
  ParameterSet<float> params;
  while (!r.at_end()) {
    const std::size_t record_start = r.pos();
    const std::uint32_t name_len = r.u32("name length");
    std::string name = r.str(name_len, "name");
    const std::uint32_t rank = r.u32("rank");
    if (rank > 8) throw ParseError("implausible rank " + std::to_string(rank), record_start);
    Shape shape(rank);
    for (auto& e : shape) e = r.u32("extent");
    Tensor<float> value(shape);
    r.floats(value.ptr(), value.size(), "values");
    if (params.contains(name)) {
      throw ParseError("duplicate parameter '" + name + "'", record_start);
    }
    params.add(name, std::move(value));
  }
  return params;
}

void save_checkpoint(const ParameterSet<float>& params,
                     const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path.string());
  const std::string bytes = encode_checkpoint(params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint: " + path.string());
}

ParameterSet<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

void assign_parameters(ParameterSet<float>& target,
                       const ParameterSet<float>& source, bool allow_extra) {
  for (auto& p : target) {
    if (!source.contains(p.name)) {
      throw InvalidArgument("checkpoint is missing parameter '" + p.name + "'");
    }
    const auto& s = source.get(p.name);
    if (s.value.shape() != p.value.shape()) {
      throw InvalidArgument("checkpoint parameter '" + p.name + "' has shape " +
                            to_string(s.value.shape()) + ", expected " +
                            to_string(p.value.shape()));
    }
    p.value = s.value;
  }
  if (!allow_extra && source.size() != target.size()) {
    for (const auto& s : source) {
      if (!target.contains(s.name)) {
        throw InvalidArgument("checkpoint has unexpected parameter '" +
                              s.name + "'");
      }
    }
  }
}

}  // namespace sssm
