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

#include "taskcodec/bottleneck.hpp"

#include <algorithm>
#include <cmath>

#include "taskcodec/error.hpp"

namespace tcc {

void ValidateImage(const Tensor& image) {
  if (image.n < 1 || image.c != 3)
    Fail(ErrorCode::kData, "image must be batch x 3 x H x W, got " +
                               image.shape_string());
  if (image.h <= 0 || image.w <= 0 || image.h % 4 || image.w % 4)
    Fail(ErrorCode::kData, "image height and width must be positive multiples "
                           "of 4, got " + image.shape_string());
  for (double v : image.v)
    if (!std::isfinite(v)) Fail(ErrorCode::kData, "image has non-finite values");
}

Tensor DrawQuantizationNoise(const Tensor& shape_like, Rng& rng) {
  Tensor noise(shape_like.n, shape_like.c, shape_like.h, shape_like.w);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (double& u : noise.v) {
    do {
      u = dist(rng);
    } while (u == -0.5);
  }
  return noise;
}

LatentCode QuantizeTrainWithNoise(const LatentCode& latent, const Tensor& noise) {
  if (latent.state != QuantState::kContinuous)
    Fail(ErrorCode::kUsage, "quantize_train expects a continuous latent");
  if (!latent.data.same_shape(noise))
    Fail(ErrorCode::kUsage, "noise shape mismatch");
  LatentCode out{latent.data, QuantState::kNoisy};
  for (std::size_t i = 0; i < out.data.v.size(); ++i) out.data.v[i] += noise.v[i];
  return out;
}

LatentCode QuantizeTrain(const LatentCode& latent, Rng& rng) {
  return QuantizeTrainWithNoise(latent, DrawQuantizationNoise(latent.data, rng));
}

LatentCode QuantizeEval(const LatentCode& latent) {
  if (latent.state == QuantState::kNoisy)
    Fail(ErrorCode::kUsage, "quantize_eval expects a continuous latent");
  LatentCode out{latent.data, QuantState::kQuantized};
  for (double& v : out.data.v) v = std::round(v);
  return out;
}

void ClampUnit(Tensor& t) {
  for (double& v : t.v) v = std::clamp(v, 0.0, 1.0);
}

Bottleneck::Bottleneck(const BottleneckConfig& config, std::uint64_t seed)
    : config_(config) {
  if (config.latent_channels < 1 || config.width < 1)
    Fail(ErrorCode::kUsage, "bottleneck channel counts must be positive");
  if (!(config.latent_scale > 0.0) || !std::isfinite(config.latent_scale))
    Fail(ErrorCode::kUsage, "latent_scale must be positive");
  const int f = config.width;
  const int c = config.latent_channels;
  if (config.latent_scale != 1.0) encoder_.Add<Scale>(config.latent_scale);
  encoder_.Add<Conv2d>(3, f, 3).Add<Relu>().Add<MaxPool2>();
  encoder_.Add<Conv2d>(f, c, 3).Add<Relu>().Add<MaxPool2>();
  decoder_.Add<UpConv2x2>(c, f).Add<Relu>();
  decoder_.Add<UpConv2x2>(f, f).Add<Relu>();
  decoder_.Add<Conv2d>(f, 3, 3);
  if (config.latent_scale != 1.0) decoder_.Add<Scale>(1.0 / config.latent_scale);
  Rng rng(seed);
  encoder_.Init(rng);
  decoder_.Init(rng);
}

void Bottleneck::CheckLatent(const LatentCode& latent) const {
  const Tensor& t = latent.data;
  if (t.n < 1 || t.c != config_.latent_channels || t.h < 1 || t.w < 1)
    Fail(ErrorCode::kData, "decode: latent shape " + t.shape_string() +
                               " does not match " +
                               std::to_string(config_.latent_channels) +
                               " latent channels");
}

LatentCode Bottleneck::Encode(const Tensor& image) const {
  ValidateImage(image);
  return {encoder_.Apply(image), QuantState::kContinuous};
}

Tensor Bottleneck::Decode(const LatentCode& latent) const {
  CheckLatent(latent);
  return decoder_.Apply(latent.data);
}

Bottleneck::Output Bottleneck::Run(const Tensor& image, Mode mode,
                                   Rng& rng) const {
  LatentCode cont = Encode(image);
  if (mode == Mode::kTrain) {
    LatentCode noisy = QuantizeTrain(cont, rng);
    Tensor recon = Decode(noisy);
    return {std::move(recon), std::move(noisy)};
  }
  LatentCode q = QuantizeEval(cont);
  Tensor recon = Decode(q);
  ClampUnit(recon);
  return {std::move(recon), std::move(q)};
}

LatentCode Bottleneck::EncodeTrain(const Tensor& image) {
  ValidateImage(image);
  return {encoder_.Forward(image), QuantState::kContinuous};
}

Tensor Bottleneck::DecodeTrain(const LatentCode& latent) {
  CheckLatent(latent);
  return decoder_.Forward(latent.data);
}

Tensor Bottleneck::BackwardDecoder(const Tensor& grad_reconstruction) {
  return decoder_.Backward(grad_reconstruction);
}

Tensor Bottleneck::BackwardEncoder(const Tensor& grad_latent) {
  return encoder_.Backward(grad_latent);
}

std::vector<Param*> Bottleneck::Params() {
  std::vector<Param*> out = encoder_.Params();
  for (Param* p : decoder_.Params()) out.push_back(p);
  return out;
}

}  // namespace tcc
