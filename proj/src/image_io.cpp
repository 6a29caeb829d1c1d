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

#include "taskcodec/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include "taskcodec/error.hpp"

namespace tcc {
namespace {

bool IsPng(const std::vector<std::uint8_t>& b) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

bool IsJpeg(const std::vector<std::uint8_t>& b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

template <typename Raster>
Raster DecodePng(const std::vector<std::uint8_t>& bytes, png_uint_32 format,
                 int channels, const std::string& what) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    Fail(ErrorCode::kData, what + ": " + img.message);
  img.format = format;
  Raster out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  auto& buf = [&]() -> std::vector<std::uint8_t>& {
    if constexpr (std::is_same_v<Raster, Rgb8>) return out.pixels;
    else return out.labels;
  }();
  buf.resize(static_cast<std::size_t>(img.width) * img.height * channels);
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    Fail(ErrorCode::kData, what + ": " + msg);
  }
  return out;
}

std::vector<std::uint8_t> EncodePngRaw(const std::uint8_t* data, int w, int h,
                                       png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, data, 0, nullptr))
    Fail(ErrorCode::kIo, std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, data, 0, nullptr))
    Fail(ErrorCode::kIo, std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// libjpeg prints recoverable warnings to stderr by default.
void JpegSilent(j_common_ptr) {}

}  // namespace

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "short write to " + path);
}

Rgb8 ReadImage(const std::string& path) {
  const auto bytes = ReadFileBytes(path);
  if (IsPng(bytes)) return DecodePng<Rgb8>(bytes, PNG_FORMAT_RGB, 3, path);
  if (IsJpeg(bytes)) return DecodeJpeg(bytes);
  Fail(ErrorCode::kData, path + ": unsupported image format");
}

Mask8 ReadMask(const std::string& path) {
  const auto bytes = ReadFileBytes(path);
  if (!IsPng(bytes)) Fail(ErrorCode::kData, path + ": masks must be PNG");
  return DecodePng<Mask8>(bytes, PNG_FORMAT_GRAY, 1, path);
}

std::vector<std::uint8_t> EncodePng(const Rgb8& image) {
  return EncodePngRaw(image.pixels.data(), image.width, image.height,
                      PNG_FORMAT_RGB);
}

void WritePng(const std::string& path, const Rgb8& image) {
  WriteFileBytes(path, EncodePng(image));
}

void WriteMaskPng(const std::string& path, const Mask8& mask) {
  WriteFileBytes(path, EncodePngRaw(mask.labels.data(), mask.width, mask.height,
                                    PNG_FORMAT_GRAY));
}

// Holds the setjmp frame; only trivially destructible locals live here.
static bool CompressJpeg(const Rgb8& image, int quality, std::uint8_t* row,
                         unsigned char** mem, unsigned long* mem_size,
                         JpegErrorManager& jerr) {
  jpeg_compress_struct cinfo;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = JpegErrorExit;
  jerr.pub.output_message = JpegSilent;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, mem, mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    std::memcpy(row, image.pixels.data() + cinfo.next_scanline * stride, stride);
    JSAMPROW rows[1] = {row};
    jpeg_write_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

std::vector<std::uint8_t> EncodeJpeg(const Rgb8& image, int quality) {
  if (quality < 1 || quality > 100)
    Fail(ErrorCode::kUsage, "jpeg quality must be in [1, 100]");
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    Fail(ErrorCode::kData, "jpeg encode: bad image buffer");
  JpegErrorManager jerr;
  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width) * 3);
  const bool ok = CompressJpeg(image, quality, row.data(), &mem, &mem_size, jerr);
  std::vector<std::uint8_t> out;
  if (ok) out.assign(mem, mem + mem_size);
  std::free(mem);
  if (!ok) Fail(ErrorCode::kData, std::string("jpeg encode: ") + jerr.message);
  return out;
}

Rgb8 DecodeJpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = JpegErrorExit;
  jerr.pub.output_message = JpegSilent;
  Rgb8 out;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    Fail(ErrorCode::kData, std::string("jpeg decode: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  if (out.width > 16384 || out.height > 16384) {
    jpeg_destroy_decompress(&cinfo);
    Fail(ErrorCode::kData, "jpeg decode: image too large");
  }
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW rows[1] = {out.pixels.data() +
                        static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3};
    jpeg_read_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

Tensor ToTensor(const Rgb8& image) {
  Tensor t(1, 3, image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(0, c, y, x) =
            image.pixels[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] / 255.0;
  return t;
}

Rgb8 FromTensor(const Tensor& t, int sample) {
  if (t.c != 3) Fail(ErrorCode::kData, "expected 3-channel tensor");
  Rgb8 out{t.w, t.h, std::vector<std::uint8_t>(static_cast<std::size_t>(t.w) * t.h * 3)};
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(t.at(sample, c, y, x), 0.0, 1.0);
        out.pixels[(static_cast<std::size_t>(y) * t.w + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  return out;
}

}  // namespace tcc
