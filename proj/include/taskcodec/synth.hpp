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

#ifndef TASKCODEC_SYNTH_HPP_
#define TASKCODEC_SYNTH_HPP_

// Procedural desk-scale datasets. Class evidence is a low-amplitude,
// high-frequency grating laid over a high-energy smooth background, so a
// distortion-only bottleneck tends to discard it.

#include <cstdint>
#include <string>

#include "taskcodec/image_io.hpp"

namespace tcc {

struct SynthOptions {
  int size = 32;
  int num_classes = 10;
  double contrast = 1.0;  // scales the class-evidence amplitude
  std::uint64_t seed = 0;
};

// Writes <dir>/class_XX/img_YYYYY.png, `per_class` images per class.
void SynthesizeClassification(const std::string& dir, int per_class,
                              const SynthOptions& options);
// Writes <dir>/images/*.png and <dir>/masks/*.png; class 0 is background.
void SynthesizeSegmentation(const std::string& dir, int count,
                            const SynthOptions& options);

}  // namespace tcc

#endif  // TASKCODEC_SYNTH_HPP_
