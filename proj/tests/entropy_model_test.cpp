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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "taskcodec/entropy_model.hpp"
#include "taskcodec/error.hpp"
#include "test_util.hpp"

namespace tcc {
namespace {

using testing::CentralDiff;
using testing::CodeOf;
using testing::RelErr;

// Logistic CDF difference in extended precision, taken on the lower-tail
// side so neither term is close to 1.
double PmfOracle(int x, double mu, double s) {
  long double a = (x + 0.5L - mu) / s;
  long double b = (x - 0.5L - mu) / s;
  if (b > 0) {
    const long double t = a;
    a = -b;
    b = -t;
  }
  return static_cast<double>(1.0L / (1.0L + std::exp(-a)) - 1.0L / (1.0L + std::exp(-b)));
}

LatentCode Quantized(Tensor t) { return {std::move(t), QuantState::kQuantized}; }

LatentCode RandomSymbols(int c, int h, int w, std::mt19937_64& rng, int lo, int hi) {
  Tensor t(1, c, h, w);
  std::uniform_int_distribution<int> d(lo, hi);
  for (double& v : t.v) v = d(rng);
  return Quantized(std::move(t));
}

EntropyModel RandomModel(int channels, std::mt19937_64& rng) {
  EntropyModel m(channels);
  std::uniform_real_distribution<double> mu(-3, 3), s(0.3, 6);
  for (int c = 0; c < channels; ++c) m.set_channel(c, mu(rng), s(rng));
  return m;
}

TEST(EntropyModelTest, PmfAtZeroForStandardLogistic) {
  EXPECT_NEAR(LogisticPmf(0, 0, 1), 0.24492, 1e-5);
  EXPECT_NEAR(LogisticPmf(0, 0, 1), std::tanh(0.25), 1e-12);
}

TEST(EntropyModelTest, PmfMatchesClosedForm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mu(-10, 10), s(0.05, 20);
  std::uniform_int_distribution<int> x(-40, 40);
  for (int i = 0; i < 1000; ++i) {
    const double m = mu(rng), sc = s(rng);
    const int k = x(rng);
    EXPECT_LE(RelErr(LogisticPmf(k, m, sc), PmfOracle(k, m, sc), 1e-300), 1e-9) << k << " " << m << " " << sc;
  }
}

TEST(EntropyModelTest, PmfNormalizesToOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu(-20, 20), s(0.05, 10);
  for (int i = 0; i < 100; ++i) {
    EntropyModel m(1);
    m.set_channel(0, mu(rng), s(rng));
    double total = TailMass(0, m);
    for (int k = kSymbolMin; k <= kSymbolMax; ++k) {
      const double p = Pmf(k, 0, m);
      ASSERT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-6) << m.location(0) << " " << m.scale(0);
  }
}

TEST(EntropyModelTest, PmfIsSymmetricAboutLocation) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> s(0.1, 8);
  std::uniform_int_distribution<int> mu(-5, 5), d(0, 30);
  for (int i = 0; i < 200; ++i) {
    const int m = mu(rng), k = d(rng);
    const double sc = s(rng);
    EXPECT_NEAR(LogisticPmf(m + k, m, sc), LogisticPmf(m - k, m, sc), 1e-15);
  }
}

TEST(EntropyModelTest, FloorCapsBitsFarInTails) {
  EntropyModel m(1);
  m.set_channel(0, 0.0, 0.1);
  ASSERT_LT(Pmf(60, 0, m), kProbFloor);
  Tensor t(1, 1, 1, 1, 60.0);
  EXPECT_NEAR(CodeLengthBits(Quantized(t), m), 32.0, 1e-12);
  t.v[0] = 20.0;
  EXPECT_NEAR(CodeLengthBits({t, QuantState::kNoisy}, m), 32.0, 1e-12);
}

TEST(EntropyModelTest, HalfProbabilitySymbolsCostOneBitEach) {
  // A very narrow logistic centred at 0.5 splits its mass between 0 and 1.
  EntropyModel m(2);
  m.set_channel(0, 0.5, 1e-3);
  m.set_channel(1, 0.5, 1e-3);
  ASSERT_NEAR(Pmf(0, 0, m), 0.5, 1e-12);
  ASSERT_NEAR(Pmf(1, 0, m), 0.5, 1e-12);
  Tensor t(1, 2, 16, 16);
  std::mt19937_64 rng(9);
  for (double& v : t.v) v = static_cast<double>(rng() & 1u);
  const LatentCode z = Quantized(t);
  EXPECT_NEAR(CodeLengthBits(z, m), 512.0, 1e-6);
  // 512 elements of half probability on a 32x32 image.
  EXPECT_NEAR(RateLoss(z, m, 32, 32), 0.5, 1e-9);
}

TEST(EntropyModelTest, CodeLengthSumsPerElementBits) {
  std::mt19937_64 rng(11);
  const EntropyModel m = RandomModel(3, rng);
  const LatentCode z = RandomSymbols(3, 4, 5, rng, -8, 8);
  double want = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i)
      want -= std::log2(std::max(PmfOracle(static_cast<int>(z.data.v[c * 20 + i]),
                                           m.location(c), m.scale(c)),
                                 kProbFloor));
  EXPECT_LE(RelErr(CodeLengthBits(z, m), want), 1e-10);
}

TEST(EntropyModelTest, EscapedSymbolsCostTailPlusRawBits) {
  EntropyModel m(1);
  Tensor t(1, 1, 1, 2);
  t.v = {100.0, -1000.0};
  const double tail = TailMass(0, m);
  EXPECT_NEAR(CodeLengthBits(Quantized(t), m), 2 * (-std::log2(std::max(tail, kProbFloor)) + 32.0),
              1e-9);
}

TEST(EntropyModelTest, RateGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-6, 6), s(0.4, 4);
  int checked = 0;
  while (checked < 20) {
    EntropyModel m(2);
    m.set_channel(0, u(rng) / 2, s(rng));
    m.set_channel(1, u(rng) / 2, s(rng));
    Tensor t(1, 2, 2, 2);
    for (double& v : t.v) v = u(rng) / 2;
    LatentCode z{t, QuantState::kNoisy};
    const RateGradient g = CodeLengthBitsWithGrad(z, m);

    const int c = checked % 2;
    const std::size_t i = static_cast<std::size_t>(checked) % t.v.size();
    double mu = m.location(c), ls = std::log(m.scale(c));
    auto with_mu = [&] {
      EntropyModel mm = m;
      mm.set_channel(c, mu, std::exp(ls));
      return CodeLengthBits(z, mm);
    };
    auto with_x = [&] { return CodeLengthBits(z, m); };
    EXPECT_LE(RelErr(g.d_location[c], CentralDiff(with_mu, mu)), 1e-3) << checked;
    EXPECT_LE(RelErr(g.d_log_scale[c], CentralDiff(with_mu, ls)), 1e-3) << checked;
    EXPECT_LE(RelErr(g.d_scale[c] * m.scale(c), g.d_log_scale[c]), 1e-12);
    EXPECT_LE(RelErr(g.d_latent.v[i], CentralDiff(with_x, z.data.v[i])), 1e-3) << checked;
    ++checked;
  }
}

TEST(EntropyModelTest, FrequencyTableSumsToTotalWithNoZeros) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> mu(-80, 80), s(1e-4, 50);
  for (int i = 0; i < 200; ++i) {
    const FrequencyTable t = BuildFrequencyTable(mu(rng), s(rng));
    EXPECT_EQ(t.cum.back(), kProbTotal);
    for (std::uint32_t f : t.freq) EXPECT_GE(f, 1u);
  }
}

TEST(EntropyModelTest, StreamRoundtripOnRandomLatents) {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> dim(1, 6), ch(1, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = ch(rng);
    const EntropyModel m = RandomModel(c, rng);
    // Mostly in-range symbols with occasional escapes on either side.
    LatentCode z = RandomSymbols(c, dim(rng), dim(rng), rng, -12, 12);
    if (trial % 5 == 0) z.data.v[0] = trial % 10 == 0 ? 70000.0 : -65.0;
    if (trial % 7 == 0) z.data.v.back() = std::numeric_limits<std::int32_t>::min();
    const Bitstream s = EncodeStream(z, m);
    const Bitstream back = ParseBitstream(SerializeBitstream(s));
    const LatentCode out = DecodeStream(back, m);
    ASSERT_EQ(out.state, QuantState::kQuantized);
    ASSERT_EQ(out.data.v, z.data.v) << "trial " << trial;
  }
}

TEST(EntropyModelTest, PeakedZeroLatentCompressesBelowOneBytePerSixteen) {
  EntropyModel m(8);
  for (int c = 0; c < 8; ++c) m.set_channel(c, 0.0, 0.01);
  const LatentCode z = Quantized(Tensor(1, 8, 8, 8, 0.0));
  const Bitstream s = EncodeStream(z, m);
  EXPECT_LT(s.payload.size(), 512u / 16u);
  EXPECT_EQ(DecodeStream(s, m).data.v, z.data.v);
}

TEST(EntropyModelTest, PayloadTracksCodeLength) {
  std::mt19937_64 rng(23);
  const EntropyModel m = RandomModel(4, rng);
  const LatentCode z = RandomSymbols(4, 16, 16, rng, -4, 4);
  const double bits = CodeLengthBits(z, m);
  const double payload_bits = 8.0 * EncodeStream(z, m).payload.size();
  EXPECT_GT(payload_bits, bits * 0.98);
  EXPECT_LT(payload_bits, bits * 1.02 + 64);
}

TEST(EntropyModelTest, HeaderSizesAndRoundtrip) {
  Bitstream s;
  s.channels = 8;
  s.height = 3;
  s.width = 5;
  s.digest = 0x0123456789abcdefULL;
  s.payload = {1, 2, 3};
  std::vector<std::uint8_t> bytes = SerializeBitstream(s);
  EXPECT_EQ(s.header_bytes(), 23u);
  EXPECT_EQ(bytes.size(), 26u);
  EXPECT_EQ(bytes[4], kBitstreamVersion);
  Bitstream back = ParseBitstream(bytes);
  EXPECT_EQ(back.channels, 8);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.digest, s.digest);
  EXPECT_EQ(back.payload, s.payload);
  EXPECT_EQ(back.true_height, 0);

  s.true_height = 11;
  s.true_width = 18;
  bytes = SerializeBitstream(s);
  EXPECT_EQ(s.header_bytes(), 27u);
  EXPECT_EQ(bytes[4], kBitstreamVersionPadded);
  back = ParseBitstream(bytes);
  EXPECT_EQ(back.true_height, 11);
  EXPECT_EQ(back.true_width, 18);
  EXPECT_EQ(back.payload, s.payload);
}

TEST(EntropyModelTest, MalformedStreamsRaiseFormatErrors) {
  std::mt19937_64 rng(29);
  const EntropyModel m = RandomModel(2, rng);
  const LatentCode z = RandomSymbols(2, 4, 4, rng, -20, 20);
  const std::vector<std::uint8_t> good = SerializeBitstream(EncodeStream(z, m));

  auto parse = [](std::vector<std::uint8_t> b) { return [b] { ParseBitstream(b); }; };
  std::vector<std::uint8_t> b = good;
  b[0] = 'X';
  EXPECT_EQ(CodeOf(parse(b)), ErrorCode::kFormat);
  b = good;
  b[4] = 9;
  EXPECT_EQ(CodeOf(parse(b)), ErrorCode::kFormat);
  EXPECT_EQ(CodeOf(parse({good.begin(), good.begin() + 10})), ErrorCode::kFormat);
  EXPECT_EQ(CodeOf(parse({good.begin(), good.end() - 1})), ErrorCode::kFormat);
  b = good;
  b.push_back(0);
  EXPECT_EQ(CodeOf(parse(b)), ErrorCode::kFormat);
  EXPECT_EQ(CodeOf(parse({})), ErrorCode::kFormat);
}

TEST(EntropyModelTest, TruncatedPayloadFailsToDecode) {
  std::mt19937_64 rng(31);
  const EntropyModel m = RandomModel(3, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Bitstream s = EncodeStream(RandomSymbols(3, 4, 4, rng, -30, 30), m);
    ASSERT_GT(s.payload.size(), 1u);
    s.payload.resize(s.payload.size() - 1 - trial % 3);
    EXPECT_EQ(CodeOf([&] { DecodeStream(s, m); }), ErrorCode::kFormat);
  }
}

TEST(EntropyModelTest, DifferentModelIsRejected) {
  std::mt19937_64 rng(37);
  EntropyModel m = RandomModel(2, rng);
  const Bitstream s = EncodeStream(RandomSymbols(2, 3, 3, rng, -3, 3), m);
  EntropyModel other = m;
  other.set_channel(1, m.location(1) + 1e-9, m.scale(1));
  EXPECT_NE(other.Digest(), m.Digest());
  EXPECT_EQ(CodeOf([&] { DecodeStream(s, other); }), ErrorCode::kWrongModel);
  EXPECT_EQ(CodeOf([&] { DecodeStream(s, EntropyModel(3)); }), ErrorCode::kWrongModel);
}

TEST(EntropyModelTest, MeasuredBppCountsHeaderAndPayload) {
  Bitstream s;
  s.payload.assign(128 - 23, 0);
  ASSERT_EQ(s.total_bytes(), 128u);
  EXPECT_DOUBLE_EQ(MeasuredBpp(s, 32, 32), 1.0);
  EXPECT_DOUBLE_EQ(PayloadBpp(s, 32, 32), 8.0 * 105 / 1024);
}

TEST(EntropyModelTest, EncodeRejectsBadLatents) {
  EntropyModel m(2);
  EXPECT_EQ(CodeOf([&] { EncodeStream({Tensor(1, 2, 2, 2), QuantState::kNoisy}, m); }),
            ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([&] { EncodeStream(Quantized(Tensor(1, 3, 2, 2)), m); }), ErrorCode::kData);
  EXPECT_EQ(CodeOf([&] { EncodeStream(Quantized(Tensor(2, 2, 2, 2)), m); }), ErrorCode::kUsage);
  Tensor t(1, 2, 1, 1);
  t.v = {0.5, 0.0};
  EXPECT_EQ(CodeOf([&] { EncodeStream(Quantized(t), m); }), ErrorCode::kData);
  t.v = {std::nan(""), 0.0};
  EXPECT_EQ(CodeOf([&] { EncodeStream(Quantized(t), m); }), ErrorCode::kData);
  t.v = {4e9, 0.0};
  EXPECT_EQ(CodeOf([&] { EncodeStream(Quantized(t), m); }), ErrorCode::kData);
}

TEST(EntropyModelTest, NonPositiveScaleIsNumericError) {
  EntropyModel m(1);
  EXPECT_EQ(CodeOf([&] { m.set_channel(0, 0.0, 0.0); }), ErrorCode::kNumeric);
  EXPECT_EQ(CodeOf([&] { m.set_channel(0, 0.0, -1.0); }), ErrorCode::kNumeric);
  EXPECT_EQ(CodeOf([] { EntropyModel(1, 0.0); }), ErrorCode::kNumeric);
  EXPECT_EQ(CodeOf([] { LogisticPmf(0, 0, 0); }), ErrorCode::kNumeric);
  EXPECT_EQ(CodeOf([] { BuildFrequencyTable(0, -2); }), ErrorCode::kNumeric);
}

TEST(EntropyModelTest, InitScaleSetsEveryChannel) {
  EntropyModel m(5, 4.0);
  for (int c = 0; c < 5; ++c) {
    EXPECT_DOUBLE_EQ(m.location(c), 0.0);
    EXPECT_NEAR(m.scale(c), 4.0, 1e-12);
  }
}

TEST(EntropyModelTest, DigestIsStableAndSensitive) {
  EntropyModel a(3), b(3);
  EXPECT_EQ(a.Digest(), b.Digest());
  b.set_channel(2, 0.0, 1.0 + 1e-12);
  EXPECT_NE(a.Digest(), b.Digest());
}

}  // namespace
}  // namespace tcc
