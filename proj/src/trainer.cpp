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

#include "taskcodec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "taskcodec/image_io.hpp"

namespace tcc {
namespace {

using nlohmann::json;

constexpr int kEvalChunk = 50;
constexpr std::uint8_t kCheckpointMagic[4] = {'T', 'C', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent per-purpose streams derived from the run seed.
std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t tag) {
  return SplitMix(SplitMix(seed) ^ (tag * 0xD1B54A32D192ED03ull));
}

enum SeedTag : std::uint64_t { kModelSeed = 1, kShuffleSeed = 3, kNoiseSeed = 4 };

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double ParseDouble(const std::string& key, const std::string& v) {
  // Accept fractions such as 1/128.
  const auto slash = v.find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double num = std::stod(v.substr(0, slash), &used);
      const double den = std::stod(v.substr(slash + 1));
      return num / den;
    }
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    Fail(ErrorCode::kUsage, "config key '" + key + "': not a number: '" + v + "'");
  }
}

long long ParseInt(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    Fail(ErrorCode::kUsage, "config key '" + key + "': not an integer: '" + v + "'");
  }
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ModelSpec SpecFor(const RunConfig& config, const DataSplit& data) {
  ModelSpec spec;
  spec.task = config.task;
  spec.num_classes = data.train.num_classes;
  spec.latent_channels = config.latent_channels;
  spec.bottleneck_width = config.bottleneck_width;
  spec.latent_scale = config.latent_scale;
  spec.prior_init_scale = config.prior_init_scale;
  spec.head_width = config.head_width;
  spec.image_size = std::min(data.train.images.h, data.train.images.w);
  spec.use_bottleneck = config.regime != Regime::kBaseline;
  return spec;
}

std::vector<double> ClassWeightsFor(const RunConfig& config, const DataSplit& data) {
  if (config.task == TaskKind::kSegmentation)
    return InverseFrequencyWeights(data.class_frequency);
  return std::vector<double>(data.train.num_classes, 1.0);
}

std::vector<std::vector<int>> EpochBatches(int n, int batch, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out;
  for (int b = 0; b < n; b += batch)
    out.emplace_back(order.begin() + b, order.begin() + std::min(n, b + batch));
  return out;
}

struct LossMeter {
  double d = 0, t = 0, r = 0, total = 0;
  double weight = 0;
  void Add(const LossBreakdown& l, int n) {
    d += l.distortion * n;
    t += l.task * n;
    r += l.rate * n;
    total += l.total * n;
    weight += n;
  }
  void Fill(EpochLog& row) const {
    const double inv = weight > 0 ? 1.0 / weight : 0.0;
    row.distortion = d * inv;
    row.task = t * inv;
    row.rate = r * inv;
    row.total = total * inv;
  }
};

struct HeadMetrics {
  double accuracy = 0.0;
  double mean_iou = 0.0;
};

HeadMetrics EvaluateHeadOn(const TaskHead& head, const Tensor& inputs,
                           const Dataset& data) {
  std::vector<int> preds;
  for (int b = 0; b < inputs.n; b += kEvalChunk) {
    const Tensor scores = head.Apply(Slice(inputs, b, std::min(inputs.n, b + kEvalChunk)));
    const std::vector<int> p = Argmax(scores);
    preds.insert(preds.end(), p.begin(), p.end());
  }
  const std::vector<int> truth = data.AllTargets();
  HeadMetrics m;
  m.accuracy = Accuracy(preds, truth);
  if (data.task == TaskKind::kSegmentation)
    m.mean_iou = MeanIou(preds, truth, head.num_classes());
  return m;
}

double SelectionMetric(TaskKind task, double accuracy, double miou) {
  return task == TaskKind::kClassification ? accuracy : miou;
}

void CheckRegime(const RunConfig& config, Regime want) {
  config.Validate();
  if (config.regime != want)
    Fail(ErrorCode::kUsage, "trainer for regime " + ToString(want) +
                                " called with regime " + ToString(config.regime));
}

MetricsRecord RecordFor(const RunConfig& config, const Evaluation& ev, int epoch) {
  MetricsRecord rec;
  rec.task = config.task;
  rec.regime = ToString(config.regime);
  rec.accuracy = ev.accuracy;
  rec.mean_iou = ev.mean_iou;
  rec.bpp = ev.bpp;
  rec.payload_bpp = ev.payload_bpp;
  rec.seed = config.seed;
  rec.beta = config.weights.beta;
  rec.best_epoch = epoch;
  return rec;
}

// Tracks the best validation epoch and its parameter snapshot.
struct BestTracker {
  double metric = -1.0;
  int epoch = 0;
  Evaluation eval;
  std::vector<std::vector<double>> params;

  bool Offer(double m, int e, const Evaluation& ev, const std::vector<Param*>& all) {
    if (epoch != 0 && !(m > metric)) return false;
    metric = m;
    epoch = e;
    eval = ev;
    params = Snapshot(all);
    return true;
  }
};

std::vector<Param*> AllParams(Model& model) {
  std::vector<Param*> all = model.CompressionParams();
  for (Param* p : model.head().Params()) all.push_back(p);
  return all;
}

StepResult StepImpl(Model& model, const Tensor& images, std::span<const int> targets,
                    std::span<const double> class_weights, const LossWeights& w,
                    const Tensor& noise, bool with_task) {
  Bottleneck& bn = model.bottleneck();
  const LatentCode cont = bn.EncodeTrain(images);
  const LatentCode noisy = QuantizeTrainWithNoise(cont, noise);
  const Tensor recon = bn.DecodeTrain(noisy);
  const LossGrad dist = DistortionLoss(recon, images);

  double task_value = 0.0;
  Tensor task_grad_recon;
  if (with_task) {
    const Tensor scores = model.head().Forward(recon);
    const LossGrad tl = TaskLoss(scores, targets, class_weights, w);
    task_value = tl.value;
    if (w.alpha != 0.0) task_grad_recon = model.head().Backward(tl.grad);
  }

  const double pixels = static_cast<double>(images.n) * images.h * images.w;
  double rate = 0.0;
  std::optional<RateGradient> rg;
  if (w.beta != 0.0) {
    rg = CodeLengthBitsWithGrad(noisy, model.entropy());
    rate = rg->bits / pixels;
  } else {
    rate = CodeLengthBits(noisy, model.entropy()) / pixels;
  }

  StepResult out;
  out.loss = TotalLoss(dist.value, task_value, rate, w);

  Tensor grad_recon = dist.grad;
  if (!task_grad_recon.v.empty())
    for (std::size_t i = 0; i < grad_recon.v.size(); ++i)
      grad_recon.v[i] += w.alpha * task_grad_recon.v[i];
  Tensor d_latent = bn.BackwardDecoder(grad_recon);
  if (rg) {
    const double s = w.beta / pixels;
    for (std::size_t i = 0; i < d_latent.v.size(); ++i)
      d_latent.v[i] += s * rg->d_latent.v[i];
    auto params = model.entropy().Params();
    for (std::size_t c = 0; c < rg->d_location.size(); ++c) {
      params[0]->grad[c] += s * rg->d_location[c];
      params[1]->grad[c] += s * rg->d_log_scale[c];
    }
  }
  out.d_image = bn.BackwardEncoder(d_latent);
  // L_D also depends on the original image directly.
  for (std::size_t i = 0; i < out.d_image.v.size(); ++i)
    out.d_image.v[i] -= dist.grad.v[i];
  return out;
}

Tensor NoiseFor(const Model& model, const Tensor& images, Rng& rng) {
  const Tensor shape(images.n, model.spec().latent_channels, images.h / 4, images.w / 4);
  return DrawQuantizationNoise(shape, rng);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string ToString(Regime r) {
  switch (r) {
    case Regime::kBaseline: return "baseline";
    case Regime::kAgnostic: return "agnostic";
    case Regime::kTactic: return "tactic";
  }
  return "?";
}

Regime ParseRegime(const std::string& s) {
  if (s == "baseline") return Regime::kBaseline;
  if (s == "agnostic") return Regime::kAgnostic;
  if (s == "tactic") return Regime::kTactic;
  Fail(ErrorCode::kUsage, "unknown regime '" + s + "' (baseline|agnostic|tactic)");
}

double RunConfig::effective_lr() const {
  if (lr > 0.0) return lr;
  return task == TaskKind::kClassification ? 1e-3 : 1e-4;
}

int RunConfig::effective_batch() const {
  if (batch > 0) return batch;
  return task == TaskKind::kClassification ? 32 : 3;
}

void RunConfig::Validate() const {
  ValidateWeights(weights);
  if (!(split > 0.0 && split < 1.0))
    Fail(ErrorCode::kUsage, "split must lie in (0, 1)");
  if (lr < 0.0 || !std::isfinite(lr)) Fail(ErrorCode::kUsage, "lr must be > 0");
  if (batch < 0) Fail(ErrorCode::kUsage, "batch must be >= 1");
  if (epochs < 1) Fail(ErrorCode::kUsage, "epochs must be >= 1");
  if (stage1_epochs < 0) Fail(ErrorCode::kUsage, "stage1_epochs must be >= 0");
  if (latent_channels < 1 || bottleneck_width < 1 || head_width < 1)
    Fail(ErrorCode::kUsage, "model widths must be positive");
  if (!(latent_scale > 0.0) || !std::isfinite(latent_scale))
    Fail(ErrorCode::kUsage, "latent_scale must be positive");
  if (!(entropy_lr_scale > 0.0) || !std::isfinite(entropy_lr_scale))
    Fail(ErrorCode::kUsage, "entropy_lr_scale must be positive");
  if (!(prior_init_scale > 0.0) || !std::isfinite(prior_init_scale))
    Fail(ErrorCode::kUsage, "prior_init_scale must be positive");
}

std::string RunConfig::ToText() const {
  std::ostringstream o;
  o << "regime = " << ToString(regime) << "\n"
    << "task = " << ToString(task) << "\n"
    << "alpha = " << Num(weights.alpha) << "\n"
    << "beta = " << Num(weights.beta) << "\n"
    << "gamma = " << Num(weights.gamma) << "\n"
    << "lr = " << Num(effective_lr()) << "\n"
    << "batch = " << effective_batch() << "\n"
    << "epochs = " << epochs << "\n"
    << "seed = " << seed << "\n"
    << "data_dir = " << data_dir << "\n"
    << "split = " << Num(split) << "\n"
    << "latent_channels = " << latent_channels << "\n"
    << "bottleneck_width = " << bottleneck_width << "\n"
    << "latent_scale = " << Num(latent_scale) << "\n"
    << "head_width = " << head_width << "\n"
    << "stage1_epochs = " << stage1_epochs << "\n"
    << "entropy_lr_scale = " << Num(entropy_lr_scale) << "\n"
    << "prior_init_scale = " << Num(prior_init_scale) << "\n";
  return o.str();
}

std::uint64_t RunConfig::Digest() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : ToText()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void SetConfigValue(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = Trim(raw);
  if (key == "regime") c.regime = ParseRegime(v);
  else if (key == "task") c.task = ParseTaskKind(v);
  else if (key == "alpha") c.weights.alpha = ParseDouble(key, v);
  else if (key == "beta") c.weights.beta = ParseDouble(key, v);
  else if (key == "gamma") c.weights.gamma = ParseDouble(key, v);
  else if (key == "lr") c.lr = ParseDouble(key, v);
  else if (key == "batch") c.batch = static_cast<int>(ParseInt(key, v));
  else if (key == "epochs") c.epochs = static_cast<int>(ParseInt(key, v));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(ParseInt(key, v));
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "split") c.split = ParseDouble(key, v);
  else if (key == "latent_channels") c.latent_channels = static_cast<int>(ParseInt(key, v));
  else if (key == "bottleneck_width") c.bottleneck_width = static_cast<int>(ParseInt(key, v));
  else if (key == "latent_scale") c.latent_scale = ParseDouble(key, v);
  else if (key == "head_width") c.head_width = static_cast<int>(ParseInt(key, v));
  else if (key == "entropy_lr_scale") c.entropy_lr_scale = ParseDouble(key, v);
  else if (key == "prior_init_scale") c.prior_init_scale = ParseDouble(key, v);
  else if (key == "stage1_epochs") c.stage1_epochs = static_cast<int>(ParseInt(key, v));
  else Fail(ErrorCode::kUsage, "unknown config key '" + key + "'");
}

RunConfig ParseRunConfig(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      Fail(ErrorCode::kUsage, "config line " + std::to_string(lineno) +
                                  ": expected key = value");
    SetConfigValue(c, Trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

// ---------------------------------------------------------------------------

Model::Model(const ModelSpec& spec, std::uint64_t seed)
    : spec_(spec),
      bottleneck_({spec.latent_channels, spec.bottleneck_width, spec.latent_scale},
                  SubSeed(seed, kModelSeed)),
      entropy_(spec.latent_channels, spec.prior_init_scale),
      head_({spec.task, spec.num_classes, spec.head_width, spec.image_size},
            SubSeed(seed, kModelSeed + 1)) {}

Tensor Model::Reconstruct(const Tensor& images) const {
  if (!spec_.use_bottleneck) return images;
  Tensor out(images.n, images.c, images.h, images.w);
  for (int b = 0; b < images.n; b += kEvalChunk) {
    const Tensor chunk = Slice(images, b, std::min(images.n, b + kEvalChunk));
    Tensor r = bottleneck_.Decode(QuantizeEval(bottleneck_.Encode(chunk)));
    ClampUnit(r);
    std::copy(r.v.begin(), r.v.end(), out.v.begin() + b * out.sample_size());
  }
  return out;
}

Tensor Model::Scores(const Tensor& images) const {
  return head_.Apply(Reconstruct(images));
}

std::vector<Param*> Model::CompressionParams() {
  std::vector<Param*> out = bottleneck_.Params();
  for (Param* p : entropy_.Params()) out.push_back(p);
  return out;
}

LossGrad TaskLoss(const Tensor& scores, std::span<const int> targets,
                  std::span<const double> class_weights, const LossWeights& w) {
  if (scores.h == 1 && scores.w == 1) return ClassificationLoss(scores, targets);
  return SegmentationLoss(scores, targets, class_weights, w);
}

StepResult TacticStep(Model& model, const Tensor& images, std::span<const int> targets,
                      std::span<const double> class_weights, const LossWeights& w,
                      const Tensor& noise) {
  return StepImpl(model, images, targets, class_weights, w, noise, true);
}

Evaluation Evaluate(const Model& model, const Dataset& data, bool measure_head) {
  Evaluation ev;
  const int n = data.size();
  const Tensor recon = model.Reconstruct(data.images);
  if (model.spec().use_bottleneck) {
    double sq = 0.0, bits = 0.0, payload = 0.0, est = 0.0;
    for (int b = 0; b < n; b += kEvalChunk) {
      const Tensor chunk = Slice(data.images, b, std::min(n, b + kEvalChunk));
      const LatentCode q = QuantizeEval(model.bottleneck().Encode(chunk));
      for (int i = 0; i < chunk.n; ++i) {
        const LatentCode one{Slice(q.data, i, i + 1), QuantState::kQuantized};
        const Bitstream s = EncodeStream(one, model.entropy());
        bits += MeasuredBpp(s, chunk.h, chunk.w);
        payload += PayloadBpp(s, chunk.h, chunk.w);
        est += RateLoss(one, model.entropy(), chunk.h, chunk.w);
      }
    }
    for (std::size_t i = 0; i < recon.v.size(); ++i) {
      const double d = recon.v[i] - data.images.v[i];
      sq += d * d;
    }
    ev.distortion = sq / static_cast<double>(recon.v.size());
    ev.bpp = bits / n;
    ev.payload_bpp = payload / n;
    ev.estimate_bpp = est / n;
  } else {
    ev.bpp = ev.payload_bpp = MeanStoredBpp(data);
  }
  if (measure_head) {
    const HeadMetrics hm = EvaluateHeadOn(model.head(), recon, data);
    ev.accuracy = hm.accuracy;
    ev.mean_iou = hm.mean_iou;
  }
  return ev;
}

std::string EpochCsv(const std::vector<EpochLog>& log) {
  std::ostringstream o;
  o << "epoch,L_D,L_T,L_R,L_total,val_accuracy,val_miou,bpp\n";
  for (const EpochLog& r : log) {
    o << r.epoch << ',' << Num(r.distortion) << ',' << Num(r.task) << ','
      << Num(r.rate) << ',' << Num(r.total) << ','
      << (r.val_accuracy ? Num(*r.val_accuracy) : "") << ','
      << (r.val_miou ? Num(*r.val_miou) : "") << ',' << Num(r.bpp) << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------

Checkpoint MakeCheckpoint(Model& model, const RunConfig& config,
                          std::vector<double> class_weights, int epoch,
                          double best_metric) {
  Checkpoint c;
  c.config = config;
  c.spec = model.spec();
  c.bottleneck = Snapshot(model.bottleneck().Params());
  c.entropy = Snapshot(model.entropy().Params());
  c.head = Snapshot(model.head().Params());
  c.class_weights = std::move(class_weights);
  c.epoch = epoch;
  c.best_metric = best_metric;
  c.config_digest = config.Digest();
  return c;
}

Model ModelFromCheckpoint(const Checkpoint& ckpt) {
  Model m(ckpt.spec, ckpt.config.seed);
  Restore(m.bottleneck().Params(), ckpt.bottleneck);
  Restore(m.entropy().Params(), ckpt.entropy);
  Restore(m.head().Params(), ckpt.head);
  return m;
}

void SaveCheckpoint(const Checkpoint& c, const std::string& path) {
  json meta;
  meta["config"] = c.config.ToText();
  meta["spec"] = {{"task", ToString(c.spec.task)},
                  {"num_classes", c.spec.num_classes},
                  {"latent_channels", c.spec.latent_channels},
                  {"bottleneck_width", c.spec.bottleneck_width},
                  {"latent_scale", c.spec.latent_scale},
                  {"prior_init_scale", c.spec.prior_init_scale},
                  {"head_width", c.spec.head_width},
                  {"image_size", c.spec.image_size},
                  {"use_bottleneck", c.spec.use_bottleneck}};
  meta["epoch"] = c.epoch;
  meta["best_metric"] = c.best_metric;
  meta["config_digest"] = c.config_digest;
  meta["class_weights"] = c.class_weights;
  auto sizes = [](const std::vector<std::vector<double>>& g) {
    std::vector<std::size_t> s;
    for (const auto& b : g) s.push_back(b.size());
    return s;
  };
  meta["blocks"] = {{"bottleneck", sizes(c.bottleneck)},
                    {"entropy", sizes(c.entropy)},
                    {"head", sizes(c.head)}};
  const std::string header = meta.dump();
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  auto put = [&out](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  };
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t hlen = header.size();
  put(&version, sizeof(version));
  put(&hlen, sizeof(hlen));
  put(header.data(), header.size());
  for (const auto* group : {&c.bottleneck, &c.entropy, &c.head})
    for (const auto& block : *group) put(block.data(), block.size() * sizeof(double));
  WriteFileBytes(path, out);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  const std::vector<std::uint8_t> bytes = ReadFileBytes(path);
  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n) {
    if (pos + n > bytes.size()) Fail(ErrorCode::kFormat, path + ": checkpoint truncated");
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  };
  std::uint8_t magic[4];
  take(magic, 4);
  if (!std::equal(magic, magic + 4, kCheckpointMagic))
    Fail(ErrorCode::kFormat, path + ": not a checkpoint");
  std::uint32_t version = 0;
  std::uint64_t hlen = 0;
  take(&version, sizeof(version));
  if (version != kCheckpointVersion)
    Fail(ErrorCode::kFormat, path + ": unsupported checkpoint version");
  take(&hlen, sizeof(hlen));
  if (hlen > bytes.size()) Fail(ErrorCode::kFormat, path + ": checkpoint truncated");
  std::string header(hlen, '\0');
  take(header.data(), hlen);
  Checkpoint c;
  try {
    const json meta = json::parse(header);
    c.config = ParseRunConfig(meta.at("config").get<std::string>());
    const json& s = meta.at("spec");
    c.spec.task = ParseTaskKind(s.at("task").get<std::string>());
    c.spec.num_classes = s.at("num_classes");
    c.spec.latent_channels = s.at("latent_channels");
    c.spec.bottleneck_width = s.at("bottleneck_width");
    c.spec.latent_scale = s.at("latent_scale");
    c.spec.prior_init_scale = s.at("prior_init_scale");
    c.spec.head_width = s.at("head_width");
    c.spec.image_size = s.at("image_size");
    c.spec.use_bottleneck = s.at("use_bottleneck");
    c.epoch = meta.at("epoch");
    c.best_metric = meta.at("best_metric");
    c.config_digest = meta.at("config_digest");
    c.class_weights = meta.at("class_weights").get<std::vector<double>>();
    const json& blocks = meta.at("blocks");
    for (auto [name, group] : {std::pair{"bottleneck", &c.bottleneck},
                               std::pair{"entropy", &c.entropy},
                               std::pair{"head", &c.head}}) {
      for (std::size_t n : blocks.at(name).get<std::vector<std::size_t>>()) {
        if (n > bytes.size()) Fail(ErrorCode::kFormat, path + ": checkpoint truncated");
        std::vector<double> block(n);
        take(block.data(), n * sizeof(double));
        group->push_back(std::move(block));
      }
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, path + ": corrupt checkpoint header: " + e.what());
  }
  if (pos != bytes.size()) Fail(ErrorCode::kFormat, path + ": trailing checkpoint bytes");
  if (c.config.Digest() != c.config_digest)
    Fail(ErrorCode::kFormat, path + ": config digest mismatch");
  return c;
}

// ---------------------------------------------------------------------------

DataSplit LoadSplit(const RunConfig& config) {
  config.Validate();
  if (config.data_dir.empty()) Fail(ErrorCode::kUsage, "config has no data_dir");
  return IngestDataset(config.data_dir, config.task, config.seed, config.split);
}

TrainResult TrainTactic(const RunConfig& config, const DataSplit& data,
                        const TrainHooks& hooks) {
  CheckRegime(config, Regime::kTactic);
  const std::vector<double> cw = ClassWeightsFor(config, data);
  Model model(SpecFor(config, data), config.seed);
  const std::vector<Param*> params = AllParams(model);
  Adam adam(params, config.effective_lr());
  for (Param* p : model.entropy().Params()) adam.SetLrScale(p, config.entropy_lr_scale);
  Rng shuffle_rng(SubSeed(config.seed, kShuffleSeed));
  Rng noise_rng(SubSeed(config.seed, kNoiseSeed));

  TrainResult result;
  BestTracker best;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    LossMeter meter;
    for (const auto& idx : EpochBatches(data.train.size(), config.effective_batch(), shuffle_rng)) {
      const Tensor images = Gather(data.train.images, idx);
      const std::vector<int> targets = data.train.Targets(idx);
      ZeroGrad(params);
      StepResult step;
      try {
        step = TacticStep(model, images, targets, cw, config.weights,
                          NoiseFor(model, images, noise_rng));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        if (best.epoch) Restore(params, best.params);
        throw TrainingAborted(std::string("training aborted at epoch ") +
                                  std::to_string(epoch) + ": " + e.what(),
                              MakeCheckpoint(model, config, cw, best.epoch, best.metric));
      }
      if (hooks.after_backward) hooks.after_backward(model, epoch, 0);
      adam.Step();
      meter.Add(step.loss, images.n);
    }
    const Evaluation ev = Evaluate(model, data.validation);
    EpochLog row;
    row.epoch = epoch;
    meter.Fill(row);
    row.val_accuracy = ev.accuracy;
    if (config.task == TaskKind::kSegmentation) row.val_miou = ev.mean_iou;
    row.bpp = ev.bpp;
    result.log.push_back(row);
    best.Offer(SelectionMetric(config.task, ev.accuracy, ev.mean_iou), epoch, ev, params);
  }
  Restore(params, best.params);
  result.checkpoint = MakeCheckpoint(model, config, cw, best.epoch, best.metric);
  result.record = RecordFor(config, best.eval, best.epoch);
  return result;
}

TrainResult TrainAgnostic(const RunConfig& config, const DataSplit& data,
                          const TrainHooks& hooks) {
  CheckRegime(config, Regime::kAgnostic);
  const std::vector<double> cw = ClassWeightsFor(config, data);
  Model model(SpecFor(config, data), config.seed);
  Rng shuffle_rng(SubSeed(config.seed, kShuffleSeed));
  Rng noise_rng(SubSeed(config.seed, kNoiseSeed));
  TrainResult result;

  auto abort_with = [&](int epoch, const Error& e, int best_epoch, double best_metric) {
    throw TrainingAborted(std::string("training aborted at epoch ") +
                              std::to_string(epoch) + ": " + e.what(),
                          MakeCheckpoint(model, config, cw, best_epoch, best_metric));
  };

  // Stage 1: compression only, on L_D + beta L_R.
  std::vector<Param*> stage1 = model.bottleneck().Params();
  if (config.weights.beta > 0.0)
    for (Param* p : model.entropy().Params()) stage1.push_back(p);
  LossWeights w1 = config.weights;
  w1.alpha = 0.0;
  {
    Adam adam(stage1, config.effective_lr());
    if (config.weights.beta > 0.0)
      for (Param* p : model.entropy().Params()) adam.SetLrScale(p, config.entropy_lr_scale);
    const int e1 = config.effective_stage1_epochs();
    for (int epoch = 1; epoch <= e1; ++epoch) {
      LossMeter meter;
      for (const auto& idx : EpochBatches(data.train.size(), config.effective_batch(), shuffle_rng)) {
        const Tensor images = Gather(data.train.images, idx);
        ZeroGrad(stage1);
        StepResult step;
        try {
          step = StepImpl(model, images, {}, cw, w1, NoiseFor(model, images, noise_rng), false);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNumeric) throw;
          abort_with(epoch, e, 0, 0.0);
        }
        if (hooks.after_backward) hooks.after_backward(model, epoch, 1);
        adam.Step();
        meter.Add(step.loss, images.n);
      }
      const Evaluation ev = Evaluate(model, data.validation, false);
      EpochLog row;
      row.epoch = epoch;
      row.stage = 1;
      meter.Fill(row);
      row.bpp = ev.bpp;
      result.log.push_back(row);
    }
  }

  // Stage 2: frozen compression in inference mode, task head only.
  const std::vector<Param*> frozen = model.CompressionParams();
  ZeroGrad(frozen);
  const std::uint64_t digest_before = ParameterDigest(frozen);
  const Evaluation comp = Evaluate(model, data.validation, false);
  const Tensor recon_train = model.Reconstruct(data.train.images);
  const Tensor recon_val = model.Reconstruct(data.validation.images);
  const std::vector<Param*> head_params = model.head().Params();
  Adam adam(head_params, config.effective_lr());
  BestTracker best;
  const int offset = config.effective_stage1_epochs();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double task_sum = 0.0;
    int seen = 0;
    for (const auto& idx : EpochBatches(data.train.size(), config.effective_batch(), shuffle_rng)) {
      const Tensor inputs = Gather(recon_train, idx);
      const std::vector<int> targets = data.train.Targets(idx);
      ZeroGrad(head_params);
      const Tensor scores = model.head().Forward(inputs);
      const LossGrad tl = TaskLoss(scores, targets, cw, config.weights);
      if (!std::isfinite(tl.value)) {
        if (best.epoch) Restore(head_params, best.params);
        abort_with(offset + epoch, Error(ErrorCode::kNumeric, "non-finite task loss L_T"),
                   offset + best.epoch, best.metric);
      }
      model.head().Backward(tl.grad);
      if (hooks.after_backward) hooks.after_backward(model, epoch, 2);
      adam.Step();
      task_sum += tl.value * inputs.n;
      seen += inputs.n;
    }
    const HeadMetrics hm = EvaluateHeadOn(model.head(), recon_val, data.validation);
    Evaluation ev = comp;
    ev.accuracy = hm.accuracy;
    ev.mean_iou = hm.mean_iou;
    EpochLog row;
    row.epoch = offset + epoch;
    row.stage = 2;
    row.distortion = comp.distortion;
    row.task = task_sum / seen;
    row.rate = comp.estimate_bpp;
    row.total = TotalLoss(row.distortion, row.task, row.rate, config.weights).total;
    row.val_accuracy = ev.accuracy;
    if (config.task == TaskKind::kSegmentation) row.val_miou = ev.mean_iou;
    row.bpp = comp.bpp;
    result.log.push_back(row);
    best.Offer(SelectionMetric(config.task, ev.accuracy, ev.mean_iou), epoch, ev, head_params);
  }
  Restore(head_params, best.params);
  if (ParameterDigest(frozen) != digest_before)
    Fail(ErrorCode::kInternal, "task-agnostic stage 2 modified compression parameters");
  result.checkpoint = MakeCheckpoint(model, config, cw, offset + best.epoch, best.metric);
  result.record = RecordFor(config, best.eval, offset + best.epoch);
  return result;
}

TrainResult TrainBaseline(const RunConfig& config, const DataSplit& data,
                          const TrainHooks& hooks) {
  CheckRegime(config, Regime::kBaseline);
  const std::vector<double> cw = ClassWeightsFor(config, data);
  Model model(SpecFor(config, data), config.seed);
  const std::vector<Param*> params = model.head().Params();
  Adam adam(params, config.effective_lr());
  Rng shuffle_rng(SubSeed(config.seed, kShuffleSeed));
  const double stored_bpp = MeanStoredBpp(data.validation);

  TrainResult result;
  BestTracker best;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double task_sum = 0.0;
    int seen = 0;
    for (const auto& idx : EpochBatches(data.train.size(), config.effective_batch(), shuffle_rng)) {
      const Tensor images = Gather(data.train.images, idx);
      const std::vector<int> targets = data.train.Targets(idx);
      ZeroGrad(params);
      const Tensor scores = model.head().Forward(images);
      const LossGrad tl = TaskLoss(scores, targets, cw, config.weights);
      if (!std::isfinite(tl.value)) {
        if (best.epoch) Restore(params, best.params);
        throw TrainingAborted("training aborted at epoch " + std::to_string(epoch) +
                                  ": non-finite task loss L_T",
                              MakeCheckpoint(model, config, cw, best.epoch, best.metric));
      }
      model.head().Backward(tl.grad);
      if (hooks.after_backward) hooks.after_backward(model, epoch, 0);
      adam.Step();
      task_sum += tl.value * images.n;
      seen += images.n;
    }
    const HeadMetrics hm = EvaluateHeadOn(model.head(), data.validation.images, data.validation);
    Evaluation ev;
    ev.accuracy = hm.accuracy;
    ev.mean_iou = hm.mean_iou;
    ev.bpp = ev.payload_bpp = stored_bpp;
    EpochLog row;
    row.epoch = epoch;
    row.task = task_sum / seen;
    row.total = config.weights.alpha * row.task;
    row.val_accuracy = ev.accuracy;
    if (config.task == TaskKind::kSegmentation) row.val_miou = ev.mean_iou;
    row.bpp = stored_bpp;
    result.log.push_back(row);
    best.Offer(SelectionMetric(config.task, ev.accuracy, ev.mean_iou), epoch, ev, params);
  }
  Restore(params, best.params);
  result.checkpoint = MakeCheckpoint(model, config, cw, best.epoch, best.metric);
  result.record = RecordFor(config, best.eval, best.epoch);
  return result;
}

TrainResult Train(const RunConfig& config, const DataSplit& data, const TrainHooks& hooks) {
  switch (config.regime) {
    case Regime::kBaseline: return TrainBaseline(config, data, hooks);
    case Regime::kAgnostic: return TrainAgnostic(config, data, hooks);
    case Regime::kTactic: return TrainTactic(config, data, hooks);
  }
  Fail(ErrorCode::kUsage, "unknown regime");
}

std::vector<SweepEntry> SweepBeta(const RunConfig& config, std::span<const double> betas,
                                  const DataSplit& data) {
  if (betas.empty()) Fail(ErrorCode::kUsage, "beta sweep needs at least one beta");
  for (double b : betas)
    if (!(b >= 0.0) || !std::isfinite(b))
      Fail(ErrorCode::kUsage, "beta values must be finite and non-negative");
  std::vector<SweepEntry> out;
  for (double b : betas) {
    RunConfig c = config;
    c.regime = Regime::kTactic;
    c.weights.beta = b;
    SweepEntry entry;
    try {
      entry.run = TrainTactic(c, data);
      entry.record = entry.run->record;
    } catch (const Error& e) {
      entry.record.task = c.task;
      entry.record.regime = ToString(c.regime);
      entry.record.seed = c.seed;
      entry.record.beta = b;
      entry.record.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

json RecordToJson(const MetricsRecord& r) {
  json j = {{"task", ToString(r.task)}, {"regime", r.regime},
            {"accuracy", r.accuracy},   {"mean_iou", r.mean_iou},
            {"bpp", r.bpp},             {"payload_bpp", r.payload_bpp},
            {"seed", r.seed},           {"beta", r.beta},
            {"best_epoch", r.best_epoch}};
  if (r.quality) j["quality"] = r.quality;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

MetricsRecord RecordFromJson(const json& j) {
  MetricsRecord r;
  r.task = ParseTaskKind(j.at("task").get<std::string>());
  r.regime = j.at("regime").get<std::string>();
  r.accuracy = j.at("accuracy");
  r.mean_iou = j.value("mean_iou", 0.0);
  r.bpp = j.at("bpp");
  r.payload_bpp = j.value("payload_bpp", 0.0);
  r.seed = j.value("seed", std::uint64_t{0});
  r.beta = j.value("beta", 0.0);
  r.best_epoch = j.value("best_epoch", 0);
  r.quality = j.value("quality", 0);
  r.error = j.value("error", std::string());
  return r;
}

}  // namespace

std::string SummaryJson(const TrainResult& result) {
  json j;
  j["config"] = result.checkpoint.config.ToText();
  j["record"] = RecordToJson(result.record);
  j["best_epoch"] = result.checkpoint.epoch;
  j["best_metric"] = result.checkpoint.best_metric;
  json epochs = json::array();
  for (const EpochLog& r : result.log) {
    json e = {{"epoch", r.epoch}, {"stage", r.stage}, {"L_D", r.distortion},
              {"L_T", r.task},    {"L_R", r.rate},    {"L_total", r.total},
              {"bpp", r.bpp}};
    if (r.val_accuracy) e["val_accuracy"] = *r.val_accuracy;
    if (r.val_miou) e["val_miou"] = *r.val_miou;
    epochs.push_back(e);
  }
  j["epochs"] = epochs;
  return j.dump(2);
}

std::string RecordsJson(const std::vector<MetricsRecord>& records) {
  json arr = json::array();
  for (const MetricsRecord& r : records) arr.push_back(RecordToJson(r));
  return json{{"records", arr}}.dump(2);
}

std::vector<MetricsRecord> ParseRecordsJson(const std::string& text) {
  std::vector<MetricsRecord> out;
  try {
    const json j = json::parse(text);
    const json& arr = j.contains("records") ? j.at("records") : j.at("record");
    if (arr.is_array()) {
      for (const json& r : arr) out.push_back(RecordFromJson(r));
    } else {
      out.push_back(RecordFromJson(arr));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kFormat, std::string("malformed metrics JSON: ") + e.what());
  }
  return out;
}

void WriteRunArtifacts(const TrainResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  SaveCheckpoint(result.checkpoint, (base / "checkpoint.bin").string());
  const std::string csv = EpochCsv(result.log);
  WriteFileBytes((base / "epochs.csv").string(), {csv.begin(), csv.end()});
  const std::string js = SummaryJson(result);
  WriteFileBytes((base / "summary.json").string(), {js.begin(), js.end()});
}

}  // namespace tcc
