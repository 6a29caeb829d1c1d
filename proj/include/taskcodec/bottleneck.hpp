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

#ifndef TASKCODEC_BOTTLENECK_HPP_
#define TASKCODEC_BOTTLENECK_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "taskcodec/layers.hpp"
#include "taskcodec/tensor.hpp"

namespace tcc {

// Images are batch x 3 x H x W tensors with values in [0,1], H and W
// divisible by 4. Throws kData on violation.
void ValidateImage(const Tensor& image);

enum class QuantState { kContinuous, kNoisy, kQuantized };
enum class Mode { kTrain, kEval };

struct LatentCode {
  Tensor data;
  QuantState state = QuantState::kContinuous;
};

struct BottleneckConfig {
  int latent_channels = 8;
  int width = 16;
  // Input gain of the encoder (the decoder output is divided by it). One
  // quantization step is worth 1 / latent_scale in image units.
  double latent_scale = 1.0;
};

// U(-0.5, 0.5) noise, open interval, one draw per latent element.
Tensor DrawQuantizationNoise(const Tensor& shape_like, Rng& rng);
LatentCode QuantizeTrain(const LatentCode& latent, Rng& rng);
// Same as QuantizeTrain with an explicit (frozen) noise draw.
LatentCode QuantizeTrainWithNoise(const LatentCode& latent, const Tensor& noise);
// Round half away from zero.
LatentCode QuantizeEval(const LatentCode& latent);

// Encoder: two (conv3x3 - ReLU - maxpool2) blocks.
// Decoder: upconv2x2 - ReLU - upconv2x2 - ReLU - conv3x3.
class Bottleneck {
 public:
  Bottleneck(const BottleneckConfig& config, std::uint64_t seed);

  const BottleneckConfig& config() const { return config_; }

  // Pure inference path.
  LatentCode Encode(const Tensor& image) const;
  Tensor Decode(const LatentCode& latent) const;

  struct Output {
    Tensor reconstruction;
    LatentCode latent;
  };
  // Eval: round + clamp reconstruction to [0,1]. Train: additive noise, no clamp.
  Output Run(const Tensor& image, Mode mode, Rng& rng) const;

  // Training path; caches activations for the matching Backward* call.
  LatentCode EncodeTrain(const Tensor& image);
  Tensor DecodeTrain(const LatentCode& latent);
  // Returns d loss / d latent given d loss / d reconstruction.
  Tensor BackwardDecoder(const Tensor& grad_reconstruction);
  // Returns d loss / d image. Noise has unit Jacobian so the latent gradient
  // passes straight through.
  Tensor BackwardEncoder(const Tensor& grad_latent);

  std::vector<Param*> Params();
  std::vector<Param*> EncoderParams() { return encoder_.Params(); }
  std::vector<Param*> DecoderParams() { return decoder_.Params(); }

 private:
  void CheckLatent(const LatentCode& latent) const;

  BottleneckConfig config_;
  Sequential encoder_;
  Sequential decoder_;
};

void ClampUnit(Tensor& t);

}  // namespace tcc

#endif  // TASKCODEC_BOTTLENECK_HPP_
