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

#include "taskcodec/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "taskcodec/error.hpp"

namespace tcc {
namespace fs = std::filesystem;
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Canvas {
  int size;
  std::vector<double> rgb;  // size * size * 3
  explicit Canvas(int s) : size(s), rgb(static_cast<std::size_t>(s) * s * 3, 0.0) {}
  double& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * size + x) * 3 + c]; }
};

// Base colour, a linear ramp and a few colour blobs / rectangles.
void PaintBackground(Canvas& cv, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int s = cv.size;
  std::array<double, 3> base{}, ramp{};
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.25 + 0.5 * u(rng);
    ramp[c] = (u(rng) - 0.5) * 0.5;
  }
  const double dir = 2 * kPi * u(rng);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const double t = ((x - s / 2.0) * std::cos(dir) + (y - s / 2.0) * std::sin(dir)) / s;
      for (int c = 0; c < 3; ++c) cv.at(y, x, c) = base[c] + ramp[c] * t;
    }
  const int blobs = 1 + static_cast<int>(u(rng) * 3);
  for (int b = 0; b < blobs; ++b) {
    const double cx = u(rng) * s, cy = u(rng) * s;
    const double sigma = s * (0.1 + 0.2 * u(rng));
    std::array<double, 3> amp{};
    for (double& a : amp) a = (u(rng) - 0.5) * 0.6;
    const bool rect = u(rng) < 0.4;
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        double wgt;
        if (rect) {
          wgt = (std::fabs(x - cx) < sigma && std::fabs(y - cy) < sigma) ? 1.0 : 0.0;
        } else {
          const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          wgt = std::exp(-d2 / (2 * sigma * sigma));
        }
        for (int c = 0; c < 3; ++c) cv.at(y, x, c) += amp[c] * wgt;
      }
  }
}

double Grating(int y, int x, double angle, double period, double phase) {
  const double t = x * std::cos(angle) + y * std::sin(angle);
  return std::sin(2 * kPi * t / period + phase);
}

// Texture parameters of class k among `classes` texture classes.
void TextureFor(int k, int classes, double* angle, double* period) {
  const int orientations = std::max(1, (classes + 1) / 2);
  *angle = kPi * (k % orientations) / orientations;
  *period = (k < orientations) ? 8.0 : 12.0;
}

Rgb8 Finish(Canvas& cv, std::mt19937_64& rng, double noise) {
  std::normal_distribution<double> g(0.0, noise);
  Rgb8 out{cv.size, cv.size, std::vector<std::uint8_t>(cv.rgb.size())};
  for (std::size_t i = 0; i < cv.rgb.size(); ++i) {
    const double v = std::clamp(cv.rgb[i] + g(rng), 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

std::string Numbered(const char* prefix, int i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
  return buf;
}

}  // namespace

void SynthesizeClassification(const std::string& dir, int per_class,
                              const SynthOptions& o) {
  if (o.size % 4 || o.size < 8 || o.num_classes < 2 || per_class < 1 ||
      !(o.contrast >= 0.0))
    Fail(ErrorCode::kUsage, "invalid synthetic classification options");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < o.num_classes; ++k) {
    const fs::path cdir = fs::path(dir) / Numbered("class_", k, 2);
    fs::create_directories(cdir);
    double angle, period;
    TextureFor(k, o.num_classes, &angle, &period);
    for (int i = 0; i < per_class; ++i) {
      Canvas cv(o.size);
      PaintBackground(cv, rng);
      const double amp = o.contrast * 0.09 * u(rng);
      const double jitter = (u(rng) - 0.5) * 0.15;
      const double phase = 2 * kPi * u(rng);
      for (int y = 0; y < o.size; ++y)
        for (int x = 0; x < o.size; ++x) {
          const double g = amp * Grating(y, x, angle + jitter, period, phase);
          for (int c = 0; c < 3; ++c) cv.at(y, x, c) += g;
        }
      WritePng((cdir / (Numbered("img_", i, 5) + ".png")).string(),
               Finish(cv, rng, 0.03));
    }
  }
}

void SynthesizeSegmentation(const std::string& dir, int count,
                            const SynthOptions& o) {
  if (o.size % 4 || o.size < 8 || o.num_classes < 2 || count < 1 ||
      !(o.contrast >= 0.0))
    Fail(ErrorCode::kUsage, "invalid synthetic segmentation options");
  const fs::path img_dir = fs::path(dir) / "images";
  const fs::path mask_dir = fs::path(dir) / "masks";
  fs::create_directories(img_dir);
  fs::create_directories(mask_dir);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int textures = o.num_classes - 1;
  for (int i = 0; i < count; ++i) {
    Canvas cv(o.size);
    PaintBackground(cv, rng);
    Mask8 mask{o.size, o.size,
               std::vector<std::uint8_t>(static_cast<std::size_t>(o.size) * o.size, 0)};
    // Later shapes occlude earlier ones, texture included.
    std::vector<double> texture(mask.labels.size(), 0.0);
    const int shapes = 1 + static_cast<int>(u(rng) * 3);
    for (int sh = 0; sh < shapes; ++sh) {
      const int k = 1 + static_cast<int>(u(rng) * textures);
      double angle, period;
      TextureFor(k - 1, textures, &angle, &period);
      const double amp = o.contrast * (0.06 + 0.06 * u(rng));
      const double phase = 2 * kPi * u(rng);
      const double cx = u(rng) * o.size, cy = u(rng) * o.size;
      const double r = o.size * (0.15 + 0.15 * u(rng));
      const bool disk = u(rng) < 0.5;
      for (int y = 0; y < o.size; ++y)
        for (int x = 0; x < o.size; ++x) {
          const double dx = x - cx, dy = y - cy;
          const bool inside = disk ? dx * dx + dy * dy < r * r
                                   : std::fabs(dx) < r && std::fabs(dy) < r;
          if (!inside) continue;
          const std::size_t j = static_cast<std::size_t>(y) * o.size + x;
          mask.labels[j] = static_cast<std::uint8_t>(k);
          texture[j] = amp * Grating(y, x, angle, period, phase);
        }
    }
    for (int y = 0; y < o.size; ++y)
      for (int x = 0; x < o.size; ++x)
        for (int c = 0; c < 3; ++c)
          cv.at(y, x, c) += texture[static_cast<std::size_t>(y) * o.size + x];
    const std::string stem = Numbered("scene_", i, 5);
    WritePng((img_dir / (stem + ".png")).string(), Finish(cv, rng, 0.02));
    WriteMaskPng((mask_dir / (stem + ".png")).string(), mask);
  }
}

}  // namespace tcc
