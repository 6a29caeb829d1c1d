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

#ifndef TASKCODEC_TRAINER_HPP_
#define TASKCODEC_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskcodec/bottleneck.hpp"
#include "taskcodec/dataset.hpp"
#include "taskcodec/entropy_model.hpp"
#include "taskcodec/error.hpp"
#include "taskcodec/objectives.hpp"
#include "taskcodec/task_heads.hpp"

namespace tcc {

enum class Regime { kBaseline, kAgnostic, kTactic };
std::string ToString(Regime r);
Regime ParseRegime(const std::string& s);

// Flat key = value configuration. Recognised keys: regime, task, alpha,
// beta, gamma, lr, batch, epochs, seed, data_dir, split, plus the model
// size keys latent_channels, bottleneck_width, latent_scale, head_width,
// entropy_lr_scale, prior_init_scale and stage1_epochs (task-agnostic
// stage 1; 0 means "same as epochs").
struct RunConfig {
  Regime regime = Regime::kTactic;
  TaskKind task = TaskKind::kClassification;
  LossWeights weights;
  double lr = 0.0;   // 0: task default (1e-3 classification, 1e-4 segmentation)
  int batch = 0;     // 0: task default (32 classification, 3 segmentation)
  int epochs = 30;
  std::uint64_t seed = 0;
  std::string data_dir;
  double split = 0.8;
  int latent_channels = 8;
  int bottleneck_width = 16;
  double latent_scale = 8.0;
  int head_width = 16;
  int stage1_epochs = 0;
  double entropy_lr_scale = 10.0;  // learning-rate multiplier for mu, log s
  double prior_init_scale = 4.0;   // initial logistic scale of every channel

  double effective_lr() const;
  int effective_batch() const;
  int effective_stage1_epochs() const { return stage1_epochs > 0 ? stage1_epochs : epochs; }
  void Validate() const;
  std::string ToText() const;  // canonical serialization
  std::uint64_t Digest() const;
};

RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::string& path);
// Throws kUsage on unknown keys or malformed values.
void SetConfigValue(RunConfig& config, const std::string& key,
                    const std::string& value);

struct ModelSpec {
  TaskKind task = TaskKind::kClassification;
  int num_classes = 10;
  int latent_channels = 8;
  int bottleneck_width = 16;
  double latent_scale = 8.0;
  double prior_init_scale = 4.0;
  int head_width = 16;
  int image_size = 32;  // min(H, W): limits classifier pooling depth
  bool use_bottleneck = true;
};

// Bottleneck, entropy model and task head for one run.
class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  Bottleneck& bottleneck() { return bottleneck_; }
  const Bottleneck& bottleneck() const { return bottleneck_; }
  EntropyModel& entropy() { return entropy_; }
  const EntropyModel& entropy() const { return entropy_; }
  TaskHead& head() { return head_; }
  const TaskHead& head() const { return head_; }

  // Eval-mode reconstruction: round, decode, clamp. Identity without a
  // bottleneck.
  Tensor Reconstruct(const Tensor& images) const;
  // Task scores on eval-mode reconstructions.
  Tensor Scores(const Tensor& images) const;
  std::vector<Param*> CompressionParams();  // bottleneck + entropy model

 private:
  ModelSpec spec_;
  Bottleneck bottleneck_;
  EntropyModel entropy_;
  TaskHead head_;
};

struct StepResult {
  LossBreakdown loss;
  Tensor d_image;  // d L_total / d input image
};

// One forward/backward pass of L = L_D + alpha L_T + beta L_R through the
// noisy bottleneck. Gradients are accumulated into the model parameters
// (callers zero them). `noise` freezes the quantization noise draw.
StepResult TacticStep(Model& model, const Tensor& images,
                      std::span<const int> targets,
                      std::span<const double> class_weights,
                      const LossWeights& weights, const Tensor& noise);

// Task loss and its gradient w.r.t. the scores.
LossGrad TaskLoss(const Tensor& scores, std::span<const int> targets,
                  std::span<const double> class_weights,
                  const LossWeights& weights);

struct Evaluation {
  double accuracy = 0.0;
  double mean_iou = 0.0;
  double bpp = 0.0;          // header-inclusive real bitstreams
  double payload_bpp = 0.0;
  double estimate_bpp = 0.0;  // differentiable estimate on quantized latents
  double distortion = 0.0;
};
// Eval-mode metrics; with `measure_head` false only compression metrics.
Evaluation Evaluate(const Model& model, const Dataset& data,
                    bool measure_head = true);

struct EpochLog {
  int epoch = 0;
  int stage = 0;  // task-agnostic: 1 = compression, 2 = task head
  double distortion = 0.0, task = 0.0, rate = 0.0, total = 0.0;
  std::optional<double> val_accuracy, val_miou;
  double bpp = 0.0;
};
std::string EpochCsv(const std::vector<EpochLog>& log);

struct Checkpoint {
  RunConfig config;
  ModelSpec spec;
  std::vector<std::vector<double>> bottleneck, entropy, head;
  std::vector<double> class_weights;
  int epoch = 0;
  double best_metric = 0.0;
  std::uint64_t config_digest = 0;
};
Checkpoint MakeCheckpoint(Model& model, const RunConfig& config,
                          std::vector<double> class_weights, int epoch,
                          double best_metric);
Model ModelFromCheckpoint(const Checkpoint& ckpt);
void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  MetricsRecord record;
};

// Raised on a non-finite loss; carries the last good (best) checkpoint.
class TrainingAborted : public Error {
 public:
  TrainingAborted(const std::string& what, Checkpoint last_good)
      : Error(ErrorCode::kNumeric, what), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

struct TrainHooks {
  // Called after every backward pass, before the optimizer step.
  std::function<void(Model&, int epoch, int stage)> after_backward;
};

TrainResult TrainTactic(const RunConfig& config, const DataSplit& data,
                        const TrainHooks& hooks = {});
TrainResult TrainAgnostic(const RunConfig& config, const DataSplit& data,
                          const TrainHooks& hooks = {});
TrainResult TrainBaseline(const RunConfig& config, const DataSplit& data,
                          const TrainHooks& hooks = {});
// Dispatches on config.regime.
TrainResult Train(const RunConfig& config, const DataSplit& data,
                  const TrainHooks& hooks = {});
DataSplit LoadSplit(const RunConfig& config);

struct SweepEntry {
  MetricsRecord record;
  std::optional<TrainResult> run;
};
// One TACTIC run per beta; failures are recorded and the sweep continues.
std::vector<SweepEntry> SweepBeta(const RunConfig& config,
                                  std::span<const double> betas,
                                  const DataSplit& data);

// Writes checkpoint.bin, epochs.csv and summary.json into `dir`.
void WriteRunArtifacts(const TrainResult& result, const std::string& dir);
std::string SummaryJson(const TrainResult& result);
std::string RecordsJson(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> ParseRecordsJson(const std::string& text);

}  // namespace tcc

#endif  // TASKCODEC_TRAINER_HPP_
