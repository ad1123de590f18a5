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
#include "sssm/image_io.h"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sssm/error.h"

namespace sssm {
namespace {

// Netpbm-style header tokenizer: whitespace-separated fields, '#' comments
// to end of line, exactly one whitespace byte before the raster.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : b_(bytes) {}

  std::string token(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_])) &&
           b_[pos_] != '#') {
      ++pos_;
    }
    if (start == pos_) {
      throw ParseError(std::string("expected ") + what, pos_);
    }
    return b_.substr(start, pos_ - start);
  }

  std::size_t number(const char* what) {
    const std::size_t at = pos_;
    const std::string t = token(what);
    std::size_t v = 0;
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch)) || v > 100000000) {
        throw ParseError(std::string("malformed ") + what + " '" + t + "'", at);
      }
      v = v * 10 + static_cast<std::size_t>(ch - '0');
    }
    return v;
  }

  // Consumes the single whitespace byte that ends the header.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) {
      throw ParseError("missing whitespace before raster", pos_);
    }
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& b_;
  std::size_t pos_ = 0;
};

struct PnmHeader {
  std::string magic;
  std::size_t width, height, maxval, data_offset;
};

PnmHeader parse_pnm_header(const std::string& bytes) {
  HeaderReader r(bytes);
  PnmHeader h;
  h.magic = r.token("magic number");
  if (h.magic != "P5" && h.magic != "P6") {
    throw ParseError("unsupported magic '" + h.magic + "' (want P5 or P6)", 0);
  }
  h.width = r.number("width");
  h.height = r.number("height");
  const std::size_t maxval_at = r.pos();
  h.maxval = r.number("maxval");
  if (h.width == 0 || h.height == 0) throw ParseError("zero image extent", maxval_at);
  if (h.maxval == 0 || h.maxval > 65535) {
    throw ParseError("maxval out of range", maxval_at);
  }
  h.data_offset = r.raster_start();
  return h;
}

void require_payload(const std::string& bytes, std::size_t offset,
                     std::size_t need) {
  if (bytes.size() < offset + need) {
    throw ParseError("truncated raster: need " + std::to_string(need) +
                         " bytes, have " +
                         std::to_string(bytes.size() - std::min(bytes.size(), offset)),
                     bytes.size());
  }
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

Tensor<float> decode_image(const std::string& bytes) {
  const PnmHeader h = parse_pnm_header(bytes);
  if (h.maxval != 255) {
    throw ParseError("only 8-bit images are supported (maxval " +
                         std::to_string(h.maxval) + ")",
                     h.data_offset - 1);
  }
  const std::size_t channels = h.magic == "P6" ? 3 : 1;
  const std::size_t n = h.width * h.height;
  require_payload(bytes, h.data_offset, n * channels);
  Tensor<float> img(Shape{h.height, h.width, 3});
  const auto* src =
      reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const unsigned char b = src[i * channels + (channels == 3 ? c : 0)];
      img[i * 3 + c] = static_cast<float>(b) / 255.0f;
    }
  }
  return img;
}

Tensor<float> read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string encode_image(const Tensor<float>& image) {
  std::size_t channels = 0;
  if (image.rank() == 2) {
    channels = 1;
  } else if (image.rank() == 3 && (image.dim(2) == 1 || image.dim(2) == 3)) {
    channels = image.dim(2);
  } else {
    throw InvalidArgument("encode_image: expected [H, W], [H, W, 1] or "
                          "[H, W, 3], got " + to_string(image.shape()));
  }
  std::string out = (channels == 3 ? "P6\n" : "P5\n") +
                    std::to_string(image.dim(1)) + " " +
                    std::to_string(image.dim(0)) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    out[header + i] = static_cast<char>(to_byte(image[i]));
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Tensor<float>& image) {
  write_file(path, encode_image(image));
}

DisparityGT decode_gt_disparity(const std::string& bytes, double scale) {
  if (!(scale > 0)) throw InvalidArgument("disparity scale must be positive");
  const PnmHeader h = parse_pnm_header(bytes);
  if (h.magic != "P5" || h.maxval != 65535) {
    throw ParseError("ground-truth disparity must be a 16-bit P5 PGM (maxval "
                     "65535), got " + h.magic + " maxval " +
                         std::to_string(h.maxval),
                     h.data_offset - 1);
  }
  const std::size_t n = h.width * h.height;
  require_payload(bytes, h.data_offset, 2 * n);
  DisparityGT gt;
  gt.values = Tensor<float>(Shape{h.height, h.width});
  gt.valid.assign(n, 0);
  const auto* src =
      reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned stored = (static_cast<unsigned>(src[2 * i]) << 8) | src[2 * i + 1];
    gt.valid[i] = stored > 0;
    gt.values[i] = static_cast<float>(stored / scale);
  }
  return gt;
}

DisparityGT read_gt_disparity(const std::filesystem::path& path, double scale) {
  try {
    return decode_gt_disparity(read_file(path), scale);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string encode_gt_disparity(const DisparityGT& gt, double scale) {
  if (gt.values.rank() != 2 || gt.valid.size() != gt.values.size()) {
    throw InvalidArgument("encode_gt_disparity: expected [H, W] values with mask");
  }
  std::string out = "P5\n" + std::to_string(gt.width()) + " " +
                    std::to_string(gt.height()) + "\n65535\n";
  const std::size_t header = out.size();
  out.resize(header + 2 * gt.values.size());
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    unsigned stored = 0;
    if (gt.valid[i]) {
      const double s = std::round(static_cast<double>(gt.values[i]) * scale);
      stored = static_cast<unsigned>(std::clamp(s, 1.0, 65535.0));
    }
    out[header + 2 * i] = static_cast<char>(stored >> 8);
    out[header + 2 * i + 1] = static_cast<char>(stored & 0xff);
  }
  return out;
}

void write_gt_disparity(const std::filesystem::path& path,
                        const DisparityGT& gt, double scale) {
  write_file(path, encode_gt_disparity(gt, scale));
}

std::string encode_pfm(const Tensor<float>& disparity) {
  if (disparity.rank() != 2) {
    throw InvalidArgument("encode_pfm: expected [H, W], got " +
                          to_string(disparity.shape()));
  }
  if (!disparity.all_finite()) {
    throw InvalidArgument("encode_pfm: disparity contains NaN/Inf");
  }
  const std::size_t h = disparity.dim(0), w = disparity.dim(1);
  std::string out =
      "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + 4 * h * w);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t src_row = h - 1 - row;
    for (std::size_t u = 0; u < w; ++u) {
      const auto bits = std::bit_cast<std::uint32_t>(disparity[src_row * w + u]);
      char* dst = out.data() + header + 4 * (row * w + u);
      for (int b = 0; b < 4; ++b) dst[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  return out;
}

Tensor<float> decode_pfm(const std::string& bytes) {
  HeaderReader r(bytes);
  const std::string magic = r.token("magic number");
  if (magic != "Pf") {
    throw ParseError("expected grayscale PFM 'Pf', got '" + magic + "'", 0);
  }
  const std::size_t w = r.number("width");
  const std::size_t h = r.number("height");
  const std::size_t scale_at = r.pos();
  const std::string scale_tok = r.token("scale");
  double scale = 0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw ParseError("malformed scale '" + scale_tok + "'", scale_at);
  }
  if (scale == 0) throw ParseError("scale must be non-zero", scale_at);
  const bool little = scale < 0;
  const std::size_t offset = r.raster_start();
  require_payload(bytes, offset, 4 * w * h);
  Tensor<float> out(Shape{h, w});
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t u = 0; u < w; ++u) {
      const unsigned char* p = src + 4 * (row * w + u);
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(p[b]) << shift;
      }
      out[(h - 1 - row) * w + u] = std::bit_cast<float>(bits);
    }
  }
  return out;
}

void write_disparity_pfm(const Tensor<float>& disparity,
                         const std::filesystem::path& path) {
  write_file(path, encode_pfm(disparity));
}

Tensor<float> read_disparity_pfm(const std::filesystem::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

}  // namespace sssm
