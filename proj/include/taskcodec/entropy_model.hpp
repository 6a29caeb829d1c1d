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

#ifndef TASKCODEC_ENTROPY_MODEL_HPP_
#define TASKCODEC_ENTROPY_MODEL_HPP_

// Factorized logistic prior over latent symbols, its differentiable rate
// estimate, and a 32-bit carry-propagating range coder that realizes it.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "taskcodec/bottleneck.hpp"
#include "taskcodec/layers.hpp"

namespace tcc {

inline constexpr int kSymbolMin = -64;
inline constexpr int kSymbolMax = 63;
inline constexpr int kAlphabet = kSymbolMax - kSymbolMin + 1;  // + escape
inline constexpr int kEscapeIndex = kAlphabet;
inline constexpr int kProbBits = 16;
inline constexpr std::uint32_t kProbTotal = 1u << kProbBits;
inline constexpr double kProbFloor = 2.3283064365386963e-10;  // 2^-32
inline constexpr double kEscapeRawBits = 32.0;

double LogisticCdf(double z);

// One (location, scale) pair per latent channel; scale = exp(log_scale).
class EntropyModel {
 public:
  // Every channel starts at location 0 and scale init_scale.
  explicit EntropyModel(int channels, double init_scale = 1.0);

  int channels() const { return static_cast<int>(location_.value.size()); }
  double location(int c) const { return location_.value.at(c); }
  double scale(int c) const { return std::exp(log_scale_.value.at(c)); }
  // Throws kNumeric (parameter domain) for scale <= 0.
  void set_channel(int c, double location, double scale);

  std::vector<Param*> Params() { return {&location_, &log_scale_}; }
  std::uint64_t Digest() const;

 private:
  Param location_;
  Param log_scale_;
};

// Discretized logistic mass of integer `x` for given location/scale.
double LogisticPmf(double x, double location, double scale);
double Pmf(int symbol, int channel, const EntropyModel& model);
// Mass outside [kSymbolMin, kSymbolMax].
double TailMass(int channel, const EntropyModel& model);

struct RateGradient {
  double bits = 0.0;
  Tensor d_latent;
  std::vector<double> d_location;
  std::vector<double> d_scale;      // w.r.t. scale itself
  std::vector<double> d_log_scale;  // chain-ruled through exp
};

// Sum over elements of -log2 p. Noisy latents use the continuous
// relaxation; quantized latents use the discrete pmf with escape coding.
double CodeLengthBits(const LatentCode& latent, const EntropyModel& model);
// Gradients of CodeLengthBits for a noisy latent.
RateGradient CodeLengthBitsWithGrad(const LatentCode& latent,
                                    const EntropyModel& model);
// Bits per image pixel, averaged over the batch.
double RateLoss(const LatentCode& latent, const EntropyModel& model,
                int image_h, int image_w);

// Quantized 16-bit frequencies over kAlphabet symbols + escape.
struct FrequencyTable {
  std::array<std::uint32_t, kAlphabet + 1> freq{};
  std::array<std::uint32_t, kAlphabet + 2> cum{};
};
FrequencyTable BuildFrequencyTable(double location, double scale);

class RangeEncoder {
 public:
  void Encode(std::uint32_t cum, std::uint32_t freq);
  std::vector<std::uint8_t> Finish();

 private:
  void ShiftLow();
  void Emit(std::uint8_t b);

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool skipped_lead_ = false;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  // Cumulative-frequency slot of the next symbol; pair with Consume().
  std::uint32_t Peek();
  void Consume(std::uint32_t cum, std::uint32_t freq);
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::uint8_t Next();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t r_ = 0;
};

struct Bitstream {
  std::uint16_t channels = 0;
  std::uint16_t height = 0;  // latent rows
  std::uint16_t width = 0;   // latent cols
  // Non-zero only when the source image was padded to a multiple of 4.
  std::uint16_t true_height = 0;
  std::uint16_t true_width = 0;
  std::uint64_t digest = 0;
  std::vector<std::uint8_t> payload;

  std::size_t header_bytes() const;
  std::size_t total_bytes() const { return header_bytes() + payload.size(); }
};

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::uint8_t kBitstreamVersionPadded = 2;

std::vector<std::uint8_t> SerializeBitstream(const Bitstream& stream);
Bitstream ParseBitstream(std::span<const std::uint8_t> bytes);

// Codes a single-image quantized latent (batch 1).
Bitstream EncodeStream(const LatentCode& latent, const EntropyModel& model);
LatentCode DecodeStream(const Bitstream& stream, const EntropyModel& model);

double MeasuredBpp(const Bitstream& stream, int image_h, int image_w);
double PayloadBpp(const Bitstream& stream, int image_h, int image_w);

}  // namespace tcc

#endif  // TASKCODEC_ENTROPY_MODEL_HPP_
