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

#ifndef TASKCODEC_OBJECTIVES_HPP_
#define TASKCODEC_OBJECTIVES_HPP_

#include <span>
#include <string>
#include <vector>

#include "taskcodec/tensor.hpp"

namespace tcc {

struct LossWeights {
  double alpha = 1.0;  // task
  double beta = 0.0;   // rate
  double gamma = 1.0;  // Dice term of the segmentation loss
};
void ValidateWeights(const LossWeights& w);

struct LossBreakdown {
  double distortion = 0.0;
  double task = 0.0;
  double rate = 0.0;
  double total = 0.0;
  // d total / d term.
  double d_distortion = 1.0;
  double d_task = 0.0;
  double d_rate = 0.0;
};

// A scalar loss and its gradient w.r.t. the first argument.
struct LossGrad {
  double value = 0.0;
  Tensor grad;
};

// Mean squared error over all elements.
LossGrad DistortionLoss(const Tensor& reconstruction, const Tensor& original);

// Softmax cross-entropy on N x K logits, averaged over the batch.
LossGrad ClassificationLoss(const Tensor& logits, std::span<const int> labels);

inline constexpr double kDiceEpsilon = 1e-6;

// Per-pixel softmax over the channel axis.
Tensor Softmax(const Tensor& scores);

// 1 - mean over present classes of (2 sum p g + eps) / (sum p + sum g + eps).
// `probs` is N x K x H x W, already normalized; `mask` holds N*H*W labels.
// Classes with zero prediction mass and zero mask pixels are skipped.
LossGrad DiceLoss(const Tensor& probs, std::span<const int> mask);

// Pixel-wise cross-entropy with per-class weights, normalized by the summed
// weight of the target pixels. Gradient is w.r.t. the raw scores.
LossGrad WeightedCrossEntropy(const Tensor& scores, std::span<const int> mask,
                              std::span<const double> class_weights);

// Weighted XE + gamma * Dice on raw scores; gradient w.r.t. the raw scores.
LossGrad SegmentationLoss(const Tensor& scores, std::span<const int> mask,
                          std::span<const double> class_weights,
                          const LossWeights& weights);

// L = L_D + alpha L_T + beta L_R. Throws kNumeric naming the offending term
// when any input is not finite.
LossBreakdown TotalLoss(double distortion, double task, double rate,
                        const LossWeights& weights);

// Inverse-frequency weights normalized to mean 1 over classes that occur.
std::vector<double> InverseFrequencyWeights(std::span<const double> frequency);

}  // namespace tcc

#endif  // TASKCODEC_OBJECTIVES_HPP_
