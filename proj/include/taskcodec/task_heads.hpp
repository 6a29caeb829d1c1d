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

#ifndef TASKCODEC_TASK_HEADS_HPP_
#define TASKCODEC_TASK_HEADS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/layers.hpp"
#include "taskcodec/tensor.hpp"

namespace tcc {

enum class TaskKind { kClassification, kSegmentation };
std::string ToString(TaskKind kind);
TaskKind ParseTaskKind(const std::string& s);

struct TaskHeadConfig {
  TaskKind kind = TaskKind::kClassification;
  int num_classes = 10;
  int width = 16;  // channels of the first block; later blocks widen
  int input_size = 32;  // min(H, W); classifier blocks stop pooling at 1x1
};

// Classifier: four (conv3x3 - ReLU - maxpool2) blocks, global average pool,
// linear layer. Segmenter: two pooled conv blocks, a bottleneck conv, two
// x2 up-convolutions and a 1x1 classifier conv at input resolution.
class TaskHead {
 public:
  TaskHead(const TaskHeadConfig& config, std::uint64_t seed);

  const TaskHeadConfig& config() const { return config_; }
  TaskKind kind() const { return config_.kind; }
  int num_classes() const { return config_.num_classes; }

  // N x K x 1 x 1 logits (classification) or N x K x H x W scores.
  Tensor Apply(const Tensor& image) const;
  Tensor Forward(const Tensor& image);
  Tensor Backward(const Tensor& grad_out);
  std::vector<Param*> Params() { return net_.Params(); }

 private:
  TaskHeadConfig config_;
  Sequential net_;
};

Tensor Classify(const TaskHead& head, const Tensor& image);
Tensor Segment(const TaskHead& head, const Tensor& image);

// Index of the maximal channel at each sample (classification) or pixel.
std::vector<int> Argmax(const Tensor& scores);

// 100 * correct / total. Throws kData on empty or mismatched inputs.
double Accuracy(std::span<const int> predictions, std::span<const int> truth);
// Mean over classes with non-empty union of 100 * |inter| / |union|.
double MeanIou(std::span<const int> predicted, std::span<const int> truth,
               int num_classes);

struct MetricsRecord {
  TaskKind task = TaskKind::kClassification;
  std::string regime;
  double accuracy = 0.0;
  double mean_iou = 0.0;      // segmentation only
  double bpp = 0.0;           // header-inclusive, from real bitstreams
  double payload_bpp = 0.0;   // payload only
  std::uint64_t seed = 0;
  double beta = 0.0;
  int quality = 0;            // JPEG reference runs
  int best_epoch = 0;
  std::string error;          // non-empty when the run failed
};

}  // namespace tcc

#endif  // TASKCODEC_TASK_HEADS_HPP_
