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

#ifndef TASKCODEC_CODEC_HPP_
#define TASKCODEC_CODEC_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/trainer.hpp"

namespace tcc {

struct CompressStats {
  int height = 0;   // true image size
  int width = 0;
  std::size_t bytes = 0;
  double bpp = 0.0;  // file bits / true pixels
};

// Images whose sides are not multiples of 4 are reflect-padded; the true
// size travels in the bitstream and is cropped back on decode.
CompressStats CompressImageFile(const Model& model, const std::string& input,
                                const std::string& output);
// Writes a PNG.
void DecompressFile(const Model& model, const std::string& input,
                    const std::string& output);

Tensor ReflectPad(const Tensor& image, int height, int width);

// One baseline task head per JPEG quality, trained and evaluated on
// JPEG-decoded images. bpp is from encoded byte counts.
std::vector<MetricsRecord> JpegBaseline(const RunConfig& config, const DataSplit& data,
                                        std::span<const int> qualities);
// JPEG round trip of every image; stored_bpp becomes the JPEG bpp.
Dataset JpegDataset(const Dataset& data, int quality);

struct CurvePoint {
  std::string source;  // tactic | agnostic | jpeg | baseline
  double param = 0.0;  // beta or quality
  double bpp = 0.0;
  double metric = 0.0;  // accuracy or mIoU
  int runs = 1;
};

struct Curves {
  std::vector<CurvePoint> rows;     // one per successful record, by bpp
  std::vector<CurvePoint> points;   // seed means, by source then bpp
  std::optional<double> baseline;   // uncompressed reference metric
  std::string metric_name;
};
// Seed-averaged rate-metric curves from sweep / JPEG / baseline records.
Curves BuildCurves(const std::vector<MetricsRecord>& records);
std::string CurvesCsv(const Curves& curves);
std::string CurvesSvg(const Curves& curves);

}  // namespace tcc

#endif  // TASKCODEC_CODEC_HPP_
