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

#include "taskcodec/tensor.hpp"

#include <algorithm>

#include "taskcodec/error.hpp"

namespace tcc {

std::string Tensor::shape_string() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" +
         std::to_string(h) + "x" + std::to_string(w);
}

Tensor Gather(const Tensor& src, std::span<const int> indices) {
  Tensor out(static_cast<int>(indices.size()), src.c, src.h, src.w);
  const std::size_t ss = src.sample_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= src.n)
      Fail(ErrorCode::kUsage, "gather index " + std::to_string(indices[i]) +
                                  " outside batch of " + std::to_string(src.n));
    auto s = src.sample(indices[i]);
    std::copy(s.begin(), s.end(), out.v.begin() + i * ss);
  }
  return out;
}

Tensor Slice(const Tensor& src, int begin, int end) {
  if (begin < 0 || end > src.n || begin > end)
    Fail(ErrorCode::kUsage, "slice [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ") outside batch of " +
                                std::to_string(src.n));
  Tensor out(end - begin, src.c, src.h, src.w);
  const std::size_t ss = src.sample_size();
  std::copy(src.v.begin() + begin * ss, src.v.begin() + end * ss,
            out.v.begin());
  return out;
}

}  // namespace tcc
