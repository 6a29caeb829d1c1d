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

#include "taskcodec/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "taskcodec/error.hpp"

namespace tcc {
namespace {

void CheckLabels(std::span<const int> labels, int k, std::size_t expected) {
  if (labels.size() != expected)
    Fail(ErrorCode::kData, "label count " + std::to_string(labels.size()) +
                               " does not match " + std::to_string(expected));
  for (int y : labels)
    if (y < 0 || y >= k)
      Fail(ErrorCode::kData, "class index " + std::to_string(y) +
                                 " outside [0, " + std::to_string(k) + ")");
}

}  // namespace

void ValidateWeights(const LossWeights& w) {
  for (double v : {w.alpha, w.beta, w.gamma})
    if (!std::isfinite(v) || v < 0.0)
      Fail(ErrorCode::kUsage, "loss weights must be finite and non-negative");
}

LossGrad DistortionLoss(const Tensor& reconstruction, const Tensor& original) {
  if (!reconstruction.same_shape(original))
    Fail(ErrorCode::kData, "distortion: shape " + reconstruction.shape_string() +
                               " vs " + original.shape_string());
  LossGrad out{0.0, Tensor(original.n, original.c, original.h, original.w)};
  const double inv = 1.0 / static_cast<double>(original.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double d = reconstruction.v[i] - original.v[i];
    out.value += d * d;
    out.grad.v[i] = 2.0 * d * inv;
  }
  out.value *= inv;
  return out;
}

LossGrad ClassificationLoss(const Tensor& logits, std::span<const int> labels) {
  const int k = static_cast<int>(logits.sample_size());
  CheckLabels(labels, k, static_cast<std::size_t>(logits.n));
  LossGrad out{0.0, Tensor(logits.n, logits.c, logits.h, logits.w)};
  const double inv_n = 1.0 / logits.n;
  for (int n = 0; n < logits.n; ++n) {
    auto z = logits.sample(n);
    auto g = out.grad.sample(n);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    out.value += (lse - z[labels[n]]) * inv_n;
    for (int c = 0; c < k; ++c)
      g[c] = (std::exp(z[c] - lse) - (c == labels[n] ? 1.0 : 0.0)) * inv_n;
  }
  return out;
}

Tensor Softmax(const Tensor& scores) {
  Tensor p(scores.n, scores.c, scores.h, scores.w);
  const std::size_t hw = scores.plane();
  for (int n = 0; n < scores.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      double m = -INFINITY;
      for (int c = 0; c < scores.c; ++c)
        m = std::max(m, scores.v[(n * scores.c + c) * hw + i]);
      double sum = 0.0;
      for (int c = 0; c < scores.c; ++c) {
        const std::size_t j = (n * scores.c + c) * hw + i;
        p.v[j] = std::exp(scores.v[j] - m);
        sum += p.v[j];
      }
      for (int c = 0; c < scores.c; ++c) p.v[(n * scores.c + c) * hw + i] /= sum;
    }
  return p;
}

LossGrad DiceLoss(const Tensor& probs, std::span<const int> mask) {
  const int k = probs.c;
  const std::size_t hw = probs.plane();
  CheckLabels(mask, k, static_cast<std::size_t>(probs.n) * hw);
  std::vector<double> inter(k, 0.0), pred(k, 0.0), truth(k, 0.0);
  for (int n = 0; n < probs.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      const int g = mask[n * hw + i];
      truth[g] += 1.0;
      for (int c = 0; c < k; ++c) {
        const double p = probs.v[(n * k + c) * hw + i];
        pred[c] += p;
        if (c == g) inter[c] += p;
      }
    }
  std::vector<int> present;
  for (int c = 0; c < k; ++c)
    if (pred[c] + truth[c] > 0.0) present.push_back(c);
  LossGrad out{0.0, Tensor(probs.n, probs.c, probs.h, probs.w)};
  if (present.empty()) return out;
  const double inv = 1.0 / static_cast<double>(present.size());
  double mean_ratio = 0.0;
  std::vector<double> dr_dp_true(k, 0.0), dr_dp_other(k, 0.0);
  for (int c : present) {
    const double num = 2.0 * inter[c] + kDiceEpsilon;
    const double den = pred[c] + truth[c] + kDiceEpsilon;
    mean_ratio += num / den * inv;
    // d ratio / d p for a pixel whose label is (true) / is not (other) c.
    dr_dp_true[c] = (2.0 * den - num) / (den * den);
    dr_dp_other[c] = -num / (den * den);
  }
  out.value = 1.0 - mean_ratio;
  for (int n = 0; n < probs.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      const int g = mask[n * hw + i];
      for (int c : present)
        out.grad.v[(n * k + c) * hw + i] =
            -inv * (c == g ? dr_dp_true[c] : dr_dp_other[c]);
    }
  return out;
}

LossGrad WeightedCrossEntropy(const Tensor& scores, std::span<const int> mask,
                              std::span<const double> class_weights) {
  const int k = scores.c;
  const std::size_t hw = scores.plane();
  CheckLabels(mask, k, static_cast<std::size_t>(scores.n) * hw);
  if (static_cast<int>(class_weights.size()) != k)
    Fail(ErrorCode::kUsage, "class weight count does not match class count");
  const Tensor p = Softmax(scores);
  LossGrad out{0.0, Tensor(scores.n, scores.c, scores.h, scores.w)};
  double wsum = 0.0;
  for (std::size_t j = 0; j < mask.size(); ++j) wsum += class_weights[mask[j]];
  if (!(wsum > 0.0)) return out;
  for (int n = 0; n < scores.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      const int g = mask[n * hw + i];
      const double w = class_weights[g] / wsum;
      const double pg = p.v[(n * k + g) * hw + i];
      out.value -= w * std::log(std::max(pg, 1e-300));
      for (int c = 0; c < k; ++c) {
        const std::size_t j = (n * k + c) * hw + i;
        out.grad.v[j] = w * (p.v[j] - (c == g ? 1.0 : 0.0));
      }
    }
  return out;
}

LossGrad SegmentationLoss(const Tensor& scores, std::span<const int> mask,
                          std::span<const double> class_weights,
                          const LossWeights& weights) {
  LossGrad xe = WeightedCrossEntropy(scores, mask, class_weights);
  if (weights.gamma == 0.0) return xe;
  const Tensor p = Softmax(scores);
  const LossGrad dice = DiceLoss(p, mask);
  xe.value += weights.gamma * dice.value;
  // Chain the Dice gradient through the softmax.
  const int k = scores.c;
  const std::size_t hw = scores.plane();
  for (int n = 0; n < scores.n; ++n)
    for (std::size_t i = 0; i < hw; ++i) {
      double dot = 0.0;
      for (int c = 0; c < k; ++c) {
        const std::size_t j = (n * k + c) * hw + i;
        dot += dice.grad.v[j] * p.v[j];
      }
      for (int c = 0; c < k; ++c) {
        const std::size_t j = (n * k + c) * hw + i;
        xe.grad.v[j] += weights.gamma * p.v[j] * (dice.grad.v[j] - dot);
      }
    }
  return xe;
}

LossBreakdown TotalLoss(double distortion, double task, double rate,
                        const LossWeights& weights) {
  if (!std::isfinite(distortion))
    Fail(ErrorCode::kNumeric, "non-finite distortion loss L_D");
  if (!std::isfinite(task)) Fail(ErrorCode::kNumeric, "non-finite task loss L_T");
  if (!std::isfinite(rate)) Fail(ErrorCode::kNumeric, "non-finite rate loss L_R");
  ValidateWeights(weights);
  LossBreakdown b;
  b.distortion = distortion;
  b.task = task;
  b.rate = rate;
  b.total = distortion + weights.alpha * task + weights.beta * rate;
  b.d_distortion = 1.0;
  b.d_task = weights.alpha;
  b.d_rate = weights.beta;
  return b;
}

std::vector<double> InverseFrequencyWeights(std::span<const double> frequency) {
  std::vector<double> w(frequency.size(), 0.0);
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < frequency.size(); ++c)
    if (frequency[c] > 0.0) {
      w[c] = 1.0 / frequency[c];
      sum += w[c];
      ++present;
    }
  if (present == 0) return std::vector<double>(frequency.size(), 1.0);
  const double mean = sum / present;
  for (std::size_t c = 0; c < frequency.size(); ++c)
    w[c] = frequency[c] > 0.0 ? w[c] / mean : 1.0;
  return w;
}

}  // namespace tcc
