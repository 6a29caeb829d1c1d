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

#include "taskcodec/entropy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "taskcodec/error.hpp"

namespace tcc {
namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'C', 'T', 'C'};
constexpr double kLn2 = 0.69314718055994530942;

double LogisticDensity(double z) {
  const double e = std::exp(-std::fabs(z));
  return e / ((1.0 + e) * (1.0 + e));
}

void CheckScale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    Fail(ErrorCode::kNumeric,
         "entropy model scale must be positive and finite, got " +
             std::to_string(scale));
}

// Mass in [centre - 0.5, centre + 0.5] together with its partial derivatives
// with respect to the two standardized interval ends.
struct IntervalMass {
  double p;
  double upper;  // standardized upper end
  double lower;  // standardized lower end
};

IntervalMass Interval(double x, double location, double scale) {
  const double a = (x + 0.5 - location) / scale;
  const double b = (x - 0.5 - location) / scale;
  // Evaluate on the side of the mode where the CDF difference is not a
  // difference of two numbers close to 1.
  const double p = b > 0.0 ? LogisticCdf(-b) - LogisticCdf(-a)
                           : LogisticCdf(a) - LogisticCdf(b);
  return {p, a, b};
}

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint64_t Get(int bytes) {
    if (pos_ + bytes > b_.size())
      Fail(ErrorCode::kFormat, "bitstream truncated inside header");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | b_[pos_++];
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

double LogisticCdf(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

EntropyModel::EntropyModel(int channels, double init_scale)
    : location_("entropy.location", static_cast<std::size_t>(channels)),
      log_scale_("entropy.log_scale", static_cast<std::size_t>(channels)) {
  if (channels < 1) Fail(ErrorCode::kUsage, "entropy model needs >= 1 channel");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale))
    Fail(ErrorCode::kNumeric, "entropy model scale must be positive");
  std::fill(log_scale_.value.begin(), log_scale_.value.end(), std::log(init_scale));
}

void EntropyModel::set_channel(int c, double location, double scale) {
  CheckScale(scale);
  location_.value.at(c) = location;
  log_scale_.value.at(c) = std::log(scale);
}

std::uint64_t EntropyModel::Digest() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const int bounds[2] = {kSymbolMin, kSymbolMax};
  mix(bounds, sizeof(bounds));
  mix(location_.value.data(), location_.value.size() * sizeof(double));
  mix(log_scale_.value.data(), log_scale_.value.size() * sizeof(double));
  return h;
}

double LogisticPmf(double x, double location, double scale) {
  CheckScale(scale);
  return Interval(x, location, scale).p;
}

double Pmf(int symbol, int channel, const EntropyModel& model) {
  return LogisticPmf(symbol, model.location(channel), model.scale(channel));
}

double TailMass(int channel, const EntropyModel& model) {
  const double mu = model.location(channel);
  const double s = model.scale(channel);
  CheckScale(s);
  return LogisticCdf((kSymbolMin - 0.5 - mu) / s) +
         LogisticCdf(-(kSymbolMax + 0.5 - mu) / s);
}

double CodeLengthBits(const LatentCode& latent, const EntropyModel& model) {
  const Tensor& t = latent.data;
  if (t.c != model.channels())
    Fail(ErrorCode::kData, "latent has " + std::to_string(t.c) +
                               " channels, entropy model has " +
                               std::to_string(model.channels()));
  if (latent.state == QuantState::kContinuous)
    Fail(ErrorCode::kUsage, "code length needs a noisy or quantized latent");
  double bits = 0.0;
  const std::size_t hw = t.plane();
  for (int c = 0; c < t.c; ++c) {
    const double mu = model.location(c);
    const double s = model.scale(c);
    CheckScale(s);
    const double tail = TailMass(c, model);
    for (int n = 0; n < t.n; ++n) {
      const double* p = t.v.data() + (static_cast<std::size_t>(n) * t.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double x = p[i];
        if (latent.state == QuantState::kQuantized &&
            (x < kSymbolMin || x > kSymbolMax)) {
          bits += -std::log2(std::max(tail, kProbFloor)) + kEscapeRawBits;
        } else {
          bits += -std::log2(std::max(Interval(x, mu, s).p, kProbFloor));
        }
      }
    }
  }
  return bits;
}

RateGradient CodeLengthBitsWithGrad(const LatentCode& latent,
                                    const EntropyModel& model) {
  const Tensor& t = latent.data;
  if (latent.state != QuantState::kNoisy)
    Fail(ErrorCode::kUsage, "rate gradients need a noisy latent");
  if (t.c != model.channels())
    Fail(ErrorCode::kData, "latent/entropy model channel mismatch");
  RateGradient g;
  g.d_latent = Tensor(t.n, t.c, t.h, t.w);
  g.d_location.assign(t.c, 0.0);
  g.d_scale.assign(t.c, 0.0);
  g.d_log_scale.assign(t.c, 0.0);
  const std::size_t hw = t.plane();
  for (int c = 0; c < t.c; ++c) {
    const double mu = model.location(c);
    const double s = model.scale(c);
    CheckScale(s);
    for (int n = 0; n < t.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * t.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const IntervalMass m = Interval(t.v[off + i], mu, s);
        if (m.p <= kProbFloor) {
          g.bits += -std::log2(kProbFloor);
          continue;
        }
        g.bits += -std::log2(m.p);
        const double dbits_dp = -1.0 / (m.p * kLn2);
        const double fa = LogisticDensity(m.upper);
        const double fb = LogisticDensity(m.lower);
        const double dp_dx = (fa - fb) / s;
        const double dp_ds = -(m.upper * fa - m.lower * fb) / s;
        g.d_latent.v[off + i] = dbits_dp * dp_dx;
        g.d_location[c] -= dbits_dp * dp_dx;
        g.d_scale[c] += dbits_dp * dp_ds;
      }
    }
    g.d_log_scale[c] = g.d_scale[c] * s;
  }
  return g;
}

double RateLoss(const LatentCode& latent, const EntropyModel& model,
                int image_h, int image_w) {
  if (image_h <= 0 || image_w <= 0)
    Fail(ErrorCode::kUsage, "rate loss needs positive image dimensions");
  return CodeLengthBits(latent, model) /
         (static_cast<double>(latent.data.n) * image_h * image_w);
}

FrequencyTable BuildFrequencyTable(double location, double scale) {
  CheckScale(scale);
  FrequencyTable t;
  std::array<double, kAlphabet + 1> p{};
  for (int i = 0; i < kAlphabet; ++i)
    p[i] = Interval(kSymbolMin + i, location, scale).p;
  p[kEscapeIndex] = LogisticCdf((kSymbolMin - 0.5 - location) / scale) +
                    LogisticCdf(-(kSymbolMax + 0.5 - location) / scale);
  std::int64_t sum = 0;
  for (int i = 0; i <= kAlphabet; ++i) {
    const double scaled = std::floor(p[i] * kProbTotal + 0.5);
    t.freq[i] = static_cast<std::uint32_t>(std::max(1.0, std::min(scaled, double(kProbTotal))));
    sum += t.freq[i];
  }
  // Settle the rounding residue on the most probable symbols.
  std::int64_t diff = static_cast<std::int64_t>(kProbTotal) - sum;
  while (diff != 0) {
    const auto top = std::max_element(t.freq.begin(), t.freq.end());
    if (diff > 0) {
      *top += static_cast<std::uint32_t>(diff);
      diff = 0;
    } else {
      const std::int64_t take = std::min<std::int64_t>(-diff, *top - 1);
      *top -= static_cast<std::uint32_t>(take);
      diff += take;
    }
  }
  t.cum[0] = 0;
  for (int i = 0; i <= kAlphabet; ++i) t.cum[i + 1] = t.cum[i] + t.freq[i];
  return t;
}

// ---------------------------------------------------------------------------

void RangeEncoder::Emit(std::uint8_t b) {
  // The first byte out of ShiftLow is always the zero initial cache.
  if (!skipped_lead_) {
    skipped_lead_ = true;
    return;
  }
  out_.push_back(b);
}

void RangeEncoder::ShiftLow() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      Emit(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::Encode(std::uint32_t cum, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kProbBits;
  low_ += static_cast<std::uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    ShiftLow();
  }
}

std::vector<std::uint8_t> RangeEncoder::Finish() {
  for (int i = 0; i < 5; ++i) ShiftLow();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | Next();
}

std::uint8_t RangeDecoder::Next() {
  if (pos_ >= bytes_.size())
    Fail(ErrorCode::kFormat, "bitstream payload truncated");
  return bytes_[pos_++];
}

std::uint32_t RangeDecoder::Peek() {
  r_ = range_ >> kProbBits;
  const std::uint32_t v = code_ / r_;
  if (v >= kProbTotal) Fail(ErrorCode::kFormat, "bitstream payload corrupt");
  return v;
}

void RangeDecoder::Consume(std::uint32_t cum, std::uint32_t freq) {
  code_ -= r_ * cum;
  range_ = r_ * freq;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    code_ = (code_ << 8) | Next();
  }
}

// ---------------------------------------------------------------------------

std::size_t Bitstream::header_bytes() const {
  const bool padded = true_height != 0 || true_width != 0;
  return 4 + 1 + 6 + (padded ? 4 : 0) + 8 + 4;
}

std::vector<std::uint8_t> SerializeBitstream(const Bitstream& s) {
  const bool padded = s.true_height != 0 || s.true_width != 0;
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(padded ? kBitstreamVersionPadded : kBitstreamVersion);
  PutU16(out, s.channels);
  PutU16(out, s.height);
  PutU16(out, s.width);
  if (padded) {
    PutU16(out, s.true_height);
    PutU16(out, s.true_width);
  }
  PutU64(out, s.digest);
  PutU32(out, static_cast<std::uint32_t>(s.payload.size()));
  out.insert(out.end(), s.payload.begin(), s.payload.end());
  return out;
}

Bitstream ParseBitstream(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (std::uint8_t m : kMagic)
    if (r.Get(1) != m) Fail(ErrorCode::kFormat, "not a bitstream (bad magic)");
  const auto version = static_cast<std::uint8_t>(r.Get(1));
  if (version != kBitstreamVersion && version != kBitstreamVersionPadded)
    Fail(ErrorCode::kFormat,
         "unsupported bitstream version " + std::to_string(version));
  Bitstream s;
  s.channels = static_cast<std::uint16_t>(r.Get(2));
  s.height = static_cast<std::uint16_t>(r.Get(2));
  s.width = static_cast<std::uint16_t>(r.Get(2));
  if (version == kBitstreamVersionPadded) {
    s.true_height = static_cast<std::uint16_t>(r.Get(2));
    s.true_width = static_cast<std::uint16_t>(r.Get(2));
    if (s.true_height == 0 || s.true_width == 0 ||
        s.true_height > 4 * s.height || s.true_width > 4 * s.width)
      Fail(ErrorCode::kFormat, "invalid true image size in header");
  }
  s.digest = r.Get(8);
  const std::uint64_t length = r.Get(4);
  const std::size_t remaining = bytes.size() - r.pos();
  if (remaining < length) Fail(ErrorCode::kFormat, "bitstream payload truncated");
  if (remaining > length) Fail(ErrorCode::kFormat, "trailing bytes after payload");
  s.payload.assign(bytes.begin() + r.pos(), bytes.end());
  return s;
}

Bitstream EncodeStream(const LatentCode& latent, const EntropyModel& model) {
  const Tensor& t = latent.data;
  if (latent.state != QuantState::kQuantized)
    Fail(ErrorCode::kUsage, "encode_stream needs a quantized latent");
  if (t.n != 1) Fail(ErrorCode::kUsage, "encode_stream codes one image at a time");
  if (t.c != model.channels())
    Fail(ErrorCode::kData, "latent/entropy model channel mismatch");
  if (t.c > 0xFFFF || t.h > 0xFFFF || t.w > 0xFFFF || t.h < 1 || t.w < 1)
    Fail(ErrorCode::kData, "latent shape not representable: " + t.shape_string());
  Bitstream s;
  s.channels = static_cast<std::uint16_t>(t.c);
  s.height = static_cast<std::uint16_t>(t.h);
  s.width = static_cast<std::uint16_t>(t.w);
  s.digest = model.Digest();
  RangeEncoder enc;
  const std::size_t hw = t.plane();
  for (int c = 0; c < t.c; ++c) {
    const FrequencyTable ft = BuildFrequencyTable(model.location(c), model.scale(c));
    for (std::size_t i = 0; i < hw; ++i) {
      const double x = t.v[c * hw + i];
      if (!std::isfinite(x) || x != std::round(x) ||
          x < std::numeric_limits<std::int32_t>::min() ||
          x > std::numeric_limits<std::int32_t>::max())
        Fail(ErrorCode::kData, "latent symbol not codable: " + std::to_string(x));
      const auto sym = static_cast<std::int32_t>(x);
      if (sym >= kSymbolMin && sym <= kSymbolMax) {
        const int idx = sym - kSymbolMin;
        enc.Encode(ft.cum[idx], ft.freq[idx]);
      } else {
        enc.Encode(ft.cum[kEscapeIndex], ft.freq[kEscapeIndex]);
        const auto raw = static_cast<std::uint32_t>(sym);
        enc.Encode(raw >> 16, 1);
        enc.Encode(raw & 0xFFFFu, 1);
      }
    }
  }
  s.payload = enc.Finish();
  return s;
}

LatentCode DecodeStream(const Bitstream& s, const EntropyModel& model) {
  if (s.digest != model.Digest())
    Fail(ErrorCode::kWrongModel,
         "bitstream was produced with a different entropy model");
  if (s.channels != model.channels())
    Fail(ErrorCode::kWrongModel, "bitstream channel count does not match model");
  if (s.height == 0 || s.width == 0)
    Fail(ErrorCode::kFormat, "bitstream declares an empty latent");
  Tensor t(1, s.channels, s.height, s.width);
  RangeDecoder dec(s.payload);
  const std::size_t hw = t.plane();
  for (int c = 0; c < t.c; ++c) {
    const FrequencyTable ft = BuildFrequencyTable(model.location(c), model.scale(c));
    for (std::size_t i = 0; i < hw; ++i) {
      const std::uint32_t v = dec.Peek();
      const int idx = static_cast<int>(
          std::upper_bound(ft.cum.begin(), ft.cum.end(), v) - ft.cum.begin()) - 1;
      dec.Consume(ft.cum[idx], ft.freq[idx]);
      if (idx != kEscapeIndex) {
        t.v[c * hw + i] = kSymbolMin + idx;
        continue;
      }
      const std::uint32_t hi = dec.Peek();
      dec.Consume(hi, 1);
      const std::uint32_t lo = dec.Peek();
      dec.Consume(lo, 1);
      const auto sym = static_cast<std::int32_t>((hi << 16) | lo);
      if (sym >= kSymbolMin && sym <= kSymbolMax)
        Fail(ErrorCode::kFormat, "bitstream payload corrupt (bad escape)");
      t.v[c * hw + i] = sym;
    }
  }
  if (!dec.exhausted())
    Fail(ErrorCode::kFormat, "bitstream payload corrupt (unconsumed bytes)");
  return {std::move(t), QuantState::kQuantized};
}

double MeasuredBpp(const Bitstream& s, int image_h, int image_w) {
  return 8.0 * static_cast<double>(s.total_bytes()) /
         (static_cast<double>(image_h) * image_w);
}

double PayloadBpp(const Bitstream& s, int image_h, int image_w) {
  return 8.0 * static_cast<double>(s.payload.size()) /
         (static_cast<double>(image_h) * image_w);
}

}  // namespace tcc
