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

#ifndef TASKCODEC_DATASET_HPP_
#define TASKCODEC_DATASET_HPP_

// On-disk layouts:
//   classification: <root>/<class_name>/<image>.{png,jpg}; classes are the
//                   subdirectories in lexicographic order.
//   segmentation:   <root>/images/<stem>.png with <root>/masks/<stem>.png,
//                   masks holding 8-bit class indices.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/task_heads.hpp"
#include "taskcodec/tensor.hpp"

namespace tcc {

struct Dataset {
  TaskKind task = TaskKind::kClassification;
  int num_classes = 0;
  Tensor images;                  // N x 3 x H x W
  std::vector<int> labels;        // classification: N
  std::vector<int> masks;         // segmentation: N * H * W
  std::vector<std::string> paths;
  std::vector<std::string> class_names;
  std::vector<double> stored_bpp;  // source file bits / pixel, per item

  int size() const { return images.n; }
  Dataset Subset(std::span<const int> indices) const;
  // Targets for a batch: labels or concatenated masks.
  std::vector<int> Targets(std::span<const int> indices) const;
  std::vector<int> AllTargets() const;
};

struct DataSplit {
  Dataset train;
  Dataset validation;
  // Fraction of training samples (classification) or training pixels
  // (segmentation) per class.
  std::vector<double> class_frequency;
};

// Seeded, disjoint, exhaustive split. Throws kData listing offending files.
DataSplit IngestDataset(const std::string& root, TaskKind task,
                        std::uint64_t seed, double train_fraction);

// Membership of the split only (indices into the sorted item list).
std::vector<int> SplitPermutation(int count, std::uint64_t seed);
int TrainCount(int count, double train_fraction);

double MeanStoredBpp(const Dataset& d);

}  // namespace tcc

#endif  // TASKCODEC_DATASET_HPP_
