// Copyright 2026 The taskcodec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TASKCODEC_IMAGE_IO_HPP_
#define TASKCODEC_IMAGE_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "taskcodec/tensor.hpp"

namespace tcc {

// 8-bit RGB raster, row-major interleaved.
struct Rgb8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

struct Mask8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;
};

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

// PNG or JPEG by content sniffing; converted to RGB.
Rgb8 ReadImage(const std::string& path);
Mask8 ReadMask(const std::string& path);  // 8-bit grayscale PNG
void WritePng(const std::string& path, const Rgb8& image);
void WriteMaskPng(const std::string& path, const Mask8& mask);
std::vector<std::uint8_t> EncodePng(const Rgb8& image);

std::vector<std::uint8_t> EncodeJpeg(const Rgb8& image, int quality);
Rgb8 DecodeJpeg(const std::vector<std::uint8_t>& bytes);

// 1 x 3 x H x W in [0,1] and back (round to nearest 8-bit level).
Tensor ToTensor(const Rgb8& image);
Rgb8 FromTensor(const Tensor& t, int sample = 0);

}  // namespace tcc

#endif  // TASKCODEC_IMAGE_IO_HPP_
