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

#include "taskcodec/task_heads.hpp"

#include <algorithm>

#include "taskcodec/error.hpp"

namespace tcc {

std::string ToString(TaskKind kind) {
  return kind == TaskKind::kClassification ? "classification" : "segmentation";
}

TaskKind ParseTaskKind(const std::string& s) {
  if (s == "classification") return TaskKind::kClassification;
  if (s == "segmentation") return TaskKind::kSegmentation;
  Fail(ErrorCode::kUsage, "unknown task '" + s + "'");
}

TaskHead::TaskHead(const TaskHeadConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.num_classes < 2)
    Fail(ErrorCode::kUsage, "task head needs at least 2 classes");
  const int f = config.width;
  const int k = config.num_classes;
  net_.Add<Scale>(2.0, -1.0);  // [0, 1] pixels to [-1, 1]
  if (config.kind == TaskKind::kClassification) {
    const int widths[4] = {f, 2 * f, 2 * f, 4 * f};
    int in = 3;
    int size = config.input_size;
    for (int out : widths) {
      net_.Add<Conv2d>(in, out, 3).Add<Relu>();
      if (size >= 2 && size % 2 == 0) {
        net_.Add<MaxPool2>();
        size /= 2;
      }
      in = out;
    }
    net_.Add<GlobalAvgPool>().Add<Linear>(4 * f, k);
  } else {
    net_.Add<Conv2d>(3, f, 3).Add<Relu>().Add<MaxPool2>();
    net_.Add<Conv2d>(f, 2 * f, 3).Add<Relu>().Add<MaxPool2>();
    net_.Add<Conv2d>(2 * f, 2 * f, 3).Add<Relu>();
    net_.Add<UpConv2x2>(2 * f, f).Add<Relu>();
    net_.Add<UpConv2x2>(f, f).Add<Relu>();
    net_.Add<Conv2d>(f, k, 1);
  }
  Rng rng(seed);
  net_.Init(rng);
}

Tensor TaskHead::Apply(const Tensor& image) const { return net_.Apply(image); }
Tensor TaskHead::Forward(const Tensor& image) { return net_.Forward(image); }
Tensor TaskHead::Backward(const Tensor& grad_out) { return net_.Backward(grad_out); }

Tensor Classify(const TaskHead& head, const Tensor& image) {
  if (head.kind() != TaskKind::kClassification)
    Fail(ErrorCode::kUsage, "classify called on a segmentation head");
  return head.Apply(image);
}

Tensor Segment(const TaskHead& head, const Tensor& image) {
  if (head.kind() != TaskKind::kSegmentation)
    Fail(ErrorCode::kUsage, "segment called on a classification head");
  if (image.h % 4 || image.w % 4)
    Fail(ErrorCode::kData, "segmenter input must be a multiple of 4");
  return head.Apply(image);
}

std::vector<int> Argmax(const Tensor& scores) {
  const std::size_t hw = scores.plane();
  std::vector<int> out(static_cast<std::size_t>(scores.n) * hw, 0);
  for (int n = 0; n < scores.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      int best = 0;
      double bv = scores.v[(n * scores.c) * hw + i];
      for (int c = 1; c < scores.c; ++c) {
        const double v = scores.v[(n * scores.c + c) * hw + i];
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      out[n * hw + i] = best;
    }
  return out;
}

double Accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.empty()) Fail(ErrorCode::kData, "accuracy of an empty set");
  if (predictions.size() != truth.size())
    Fail(ErrorCode::kData, "accuracy: prediction/label length mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    correct += predictions[i] == truth[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

double MeanIou(std::span<const int> predicted, std::span<const int> truth,
               int num_classes) {
  if (predicted.size() != truth.size())
    Fail(ErrorCode::kData, "mean IoU: mask size mismatch");
  std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predicted[i], g = truth[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
      Fail(ErrorCode::kData, "mean IoU: label outside [0, K)");
    if (p == g) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[g];
    }
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    sum += 100.0 * static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

}  // namespace tcc
