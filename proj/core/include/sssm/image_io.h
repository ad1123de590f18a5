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
#ifndef SSSM_IMAGE_IO_H_
#define SSSM_IMAGE_IO_H_

#include <filesystem>
#include <string>

#include "sssm/metrics.h"
#include "sssm/tensor.h"

namespace sssm {

// Binary 8-bit PPM (P6) or PGM (P5, replicated to three channels) as
// [H, W, 3] with values byte / 255.
Tensor<float> decode_image(const std::string& bytes);
Tensor<float> read_image(const std::filesystem::path& path);

// [H, W, 3] -> P6, [H, W, 1] or [H, W] -> P5. Values are clamped to [0, 1]
// and rounded to the nearest byte.
std::string encode_image(const Tensor<float>& image);
void write_image(const std::filesystem::path& path, const Tensor<float>& image);

// 16-bit big-endian PGM (P5, maxval 65535). disparity = stored / scale,
// stored 0 marks an invalid pixel.
DisparityGT decode_gt_disparity(const std::string& bytes, double scale = 256.0);
DisparityGT read_gt_disparity(const std::filesystem::path& path,
                              double scale = 256.0);
std::string encode_gt_disparity(const DisparityGT& gt, double scale = 256.0);
void write_gt_disparity(const std::filesystem::path& path,
                        const DisparityGT& gt, double scale = 256.0);

// Grayscale PFM: "Pf\n", "W H\n", "-1.0\n", little-endian float32 rows
// bottom to top.
std::string encode_pfm(const Tensor<float>& disparity);
Tensor<float> decode_pfm(const std::string& bytes);
void write_disparity_pfm(const Tensor<float>& disparity,
                         const std::filesystem::path& path);
Tensor<float> read_disparity_pfm(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sssm

#endif  // SSSM_IMAGE_IO_H_
