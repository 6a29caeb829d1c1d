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
#include <random>

#include "taskcodec/bottleneck.hpp"
#include "taskcodec/error.hpp"
#include "test_util.hpp"

namespace tcc {
namespace {

using testing::CodeOf;
using testing::RandomTensor;

// Scalar oracle: nearest integer, halves away from zero.
double RoundOracle(double x) {
  const double f = std::floor(std::fabs(x));
  const double frac = std::fabs(x) - f;
  const double mag = frac >= 0.5 ? f + 1.0 : f;
  return x < 0 ? -mag : mag;
}

TEST(BottleneckTest, EncodeDividesSpatialDimsByFour) {
  Bottleneck bn({8, 16}, 1);
  std::mt19937_64 rng(1);
  const LatentCode z = bn.Encode(RandomTensor(2, 3, 32, 32, rng, 0, 1));
  EXPECT_EQ(z.state, QuantState::kContinuous);
  EXPECT_EQ(z.data.n, 2);
  EXPECT_EQ(z.data.c, 8);
  EXPECT_EQ(z.data.h, 8);
  EXPECT_EQ(z.data.w, 8);
}

TEST(BottleneckTest, LargeImageLatentShape) {
  Bottleneck bn({8, 4}, 1);
  const LatentCode z = bn.Encode(Tensor(1, 3, 512, 512, 0.5));
  EXPECT_EQ(z.data.c, 8);
  EXPECT_EQ(z.data.h, 128);
  EXPECT_EQ(z.data.w, 128);
}

TEST(BottleneckTest, SpatialContractOverRandomSizes) {
  Bottleneck bn({3, 4}, 2);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> side(1, 6);
  for (int trial = 0; trial < 12; ++trial) {
    const int h = 4 * side(rng), w = 4 * side(rng);
    const Tensor img = RandomTensor(1, 3, h, w, rng, 0, 1);
    const LatentCode z = bn.Encode(img);
    ASSERT_EQ(z.data.h, h / 4);
    ASSERT_EQ(z.data.w, w / 4);
    const Tensor r = bn.Decode(QuantizeEval(z));
    EXPECT_TRUE(r.same_shape(img));
  }
}

TEST(BottleneckTest, ZeroImageWithZeroBiasGivesZeroLatent) {
  Bottleneck bn({8, 16}, 3);
  const LatentCode z = bn.Encode(Tensor(1, 3, 16, 16, 0.0));
  for (double v : z.data.v) EXPECT_EQ(v, 0.0);
}

TEST(BottleneckTest, DecodePreservesBatchAndRestoresShape) {
  Bottleneck bn({8, 16}, 4);
  std::mt19937_64 rng(4);
  const Tensor latent = RandomTensor(32, 8, 8, 8, rng, 0, 3);
  const Tensor img = bn.Decode({latent, QuantState::kContinuous});
  EXPECT_EQ(img.n, 32);
  EXPECT_EQ(img.c, 3);
  EXPECT_EQ(img.h, 32);
  EXPECT_EQ(img.w, 32);
}

TEST(BottleneckTest, InvalidImagesAreDataErrors) {
  Bottleneck bn({8, 16}, 5);
  EXPECT_EQ(CodeOf([&] { bn.Encode(Tensor(1, 3, 30, 32)); }), ErrorCode::kData);
  EXPECT_EQ(CodeOf([&] { bn.Encode(Tensor(1, 1, 32, 32)); }), ErrorCode::kData);
  EXPECT_EQ(CodeOf([&] { bn.Encode(Tensor(0, 3, 32, 32)); }), ErrorCode::kData);
  Tensor nan_img(1, 3, 8, 8);
  nan_img.v[5] = std::nan("");
  EXPECT_EQ(CodeOf([&] { bn.Encode(nan_img); }), ErrorCode::kData);
}

TEST(BottleneckTest, DecodeShapeMismatchIsDataError) {
  Bottleneck bn({8, 16}, 6);
  EXPECT_EQ(CodeOf([&] { bn.Decode({Tensor(1, 4, 2, 2), QuantState::kQuantized}); }),
            ErrorCode::kData);
}

TEST(BottleneckTest, InvalidConfigIsUsageError) {
  EXPECT_EQ(CodeOf([] { Bottleneck({0, 16}, 1); }), ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([] { Bottleneck({8, 16, 0.0}, 1); }), ErrorCode::kUsage);
}

TEST(BottleneckTest, LatentScaleIsInputGain) {
  Bottleneck a({4, 6, 1.0}, 9), b({4, 6, 8.0}, 9);
  std::mt19937_64 rng(9);
  const Tensor img = RandomTensor(1, 3, 8, 8, rng, 0, 1);
  const LatentCode za = a.Encode(img), zb = b.Encode(img);
  // Zero biases keep the encoder positively homogeneous.
  for (std::size_t i = 0; i < za.data.v.size(); ++i)
    EXPECT_NEAR(zb.data.v[i], 8.0 * za.data.v[i], 1e-12);
  const Tensor ra = a.Decode(za), rb = b.Decode(zb);
  for (std::size_t i = 0; i < ra.v.size(); ++i) EXPECT_NEAR(rb.v[i], ra.v[i], 1e-12);
}

TEST(QuantizeTrainTest, ZeroLatentStaysInsideOpenInterval) {
  Rng rng(10);
  const LatentCode z{Tensor(4, 8, 8, 8), QuantState::kContinuous};
  const LatentCode q = QuantizeTrain(z, rng);
  EXPECT_EQ(q.state, QuantState::kNoisy);
  for (double v : q.data.v) {
    EXPECT_GT(v, -0.5);
    EXPECT_LT(v, 0.5);
  }
}

TEST(QuantizeTrainTest, ResidualBoundedForArbitraryLatent) {
  std::mt19937_64 g(11);
  Rng rng(11);
  const LatentCode z{RandomTensor(2, 4, 16, 16, g, -100, 100), QuantState::kContinuous};
  const LatentCode q = QuantizeTrain(z, rng);
  for (std::size_t i = 0; i < z.data.v.size(); ++i)
    EXPECT_LT(std::fabs(q.data.v[i] - z.data.v[i]), 0.5);
}

TEST(QuantizeTrainTest, NoiseMeanMatchesUniformMoments) {
  Rng rng(12);
  const Tensor shape(1, 1, 1000, 1000);
  const Tensor u = DrawQuantizationNoise(shape, rng);
  double sum = 0.0, sq = 0.0;
  for (double v : u.v) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(u.v.size());
  EXPECT_LT(std::fabs(sum / n), 4.0 / std::sqrt(12.0 * n));
  EXPECT_NEAR(sq / n, 1.0 / 12.0, 1e-3);
}

TEST(QuantizeTrainTest, FixedNoiseIsAdditiveWithUnitSlope) {
  std::mt19937_64 g(13);
  Rng rng(13);
  Tensor x = RandomTensor(1, 2, 3, 3, g);
  const Tensor noise = DrawQuantizationNoise(x, rng);
  const std::size_t i = 7;
  const double h = 1e-6;
  auto eval = [&](double xi) {
    Tensor y = x;
    y.v[i] = xi;
    return QuantizeTrainWithNoise({y, QuantState::kContinuous}, noise).data.v[i];
  };
  const double slope = (eval(x.v[i] + h) - eval(x.v[i] - h)) / (2 * h);
  EXPECT_NEAR(slope, 1.0, 1e-4);
  EXPECT_EQ(eval(x.v[i]), x.v[i] + noise.v[i]);
}

TEST(QuantizeTrainTest, SameSeedReproducesNoise) {
  Rng a(77), b(77);
  const Tensor s(1, 2, 4, 4);
  EXPECT_EQ(DrawQuantizationNoise(s, a).v, DrawQuantizationNoise(s, b).v);
}

TEST(QuantizeTrainTest, RejectsNonContinuousInput) {
  Rng rng(14);
  EXPECT_EQ(CodeOf([&] { QuantizeTrain({Tensor(1, 1, 1, 1), QuantState::kQuantized}, rng); }),
            ErrorCode::kUsage);
}

TEST(QuantizeEvalTest, NearestIntegerWithTiesAwayFromZero) {
  Tensor x(1, 1, 1, 8);
  x.v = {1.4, -1.4, 0.5, -2.5, 2.5, -0.5, 0.49999999, -3.0};
  const LatentCode q = QuantizeEval({x, QuantState::kContinuous});
  EXPECT_EQ(q.state, QuantState::kQuantized);
  EXPECT_EQ(q.data.v, (std::vector<double>{1, -1, 1, -3, 3, -1, 0, -3}));
}

TEST(QuantizeEvalTest, AgreesWithScalarOracleIncludingHalves) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  std::uniform_int_distribution<int> k(-200, 200);
  Tensor x(1, 1, 1, 100000);
  for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = i % 4 == 0 ? k(rng) + 0.5 : u(rng);
  const LatentCode q = QuantizeEval({x, QuantState::kContinuous});
  for (std::size_t i = 0; i < x.v.size(); ++i) ASSERT_EQ(q.data.v[i], RoundOracle(x.v[i])) << x.v[i];
}

TEST(QuantizeEvalTest, Idempotent) {
  std::mt19937_64 rng(16);
  const LatentCode q1 = QuantizeEval({RandomTensor(1, 3, 5, 5, rng, -9, 9), QuantState::kContinuous});
  const LatentCode q2 = QuantizeEval(q1);
  EXPECT_EQ(q1.data.v, q2.data.v);
}

TEST(QuantizeEvalTest, RejectsNoisyInput) {
  EXPECT_EQ(CodeOf([] { QuantizeEval({Tensor(1, 1, 1, 1), QuantState::kNoisy}); }),
            ErrorCode::kUsage);
}

TEST(RunTest, EvalIsDeterministicAndClamped) {
  Bottleneck bn({8, 16}, 17);
  std::mt19937_64 g(17);
  const Tensor img = RandomTensor(2, 3, 16, 16, g, 0, 1);
  Rng r1(1), r2(2);
  const auto a = bn.Run(img, Mode::kEval, r1);
  const auto b = bn.Run(img, Mode::kEval, r2);
  EXPECT_EQ(a.reconstruction.v, b.reconstruction.v);
  EXPECT_EQ(a.latent.state, QuantState::kQuantized);
  for (double v : a.reconstruction.v) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RunTest, TrainUsesNoisyLatentAndIsSeedReproducible) {
  Bottleneck bn({8, 16}, 18);
  std::mt19937_64 g(18);
  const Tensor img = RandomTensor(1, 3, 16, 16, g, 0, 1);
  Rng r1(5), r2(5);
  const auto a = bn.Run(img, Mode::kTrain, r1);
  const auto b = bn.Run(img, Mode::kTrain, r2);
  EXPECT_EQ(a.latent.state, QuantState::kNoisy);
  EXPECT_EQ(a.reconstruction.v, b.reconstruction.v);
  EXPECT_EQ(a.latent.data.v, b.latent.data.v);
}

TEST(BottleneckTest, ParameterCountFixedBySeedIndependentOfData) {
  Bottleneck a({8, 16}, 1), b({8, 16}, 2);
  EXPECT_EQ(ParameterCount(a.Params()), ParameterCount(b.Params()));
  EXPECT_NE(ParameterDigest(a.Params()), ParameterDigest(b.Params()));
  EXPECT_EQ(ParameterCount(a.Params()),
            ParameterCount(a.EncoderParams()) + ParameterCount(a.DecoderParams()));
}

}  // namespace
}  // namespace tcc
