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

#ifndef TASKCODEC_TENSOR_HPP_
#define TASKCODEC_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tcc {

// Dense NCHW tensor of doubles. Fully-connected activations use h = w = 1.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }

  double& at(int in, int ic, int iy, int ix) {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  double at(int in, int ic, int iy, int ix) const {
    return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }

  std::span<double> sample(int in) {
    return {v.data() + in * sample_size(), sample_size()};
  }
  std::span<const double> sample(int in) const {
    return {v.data() + in * sample_size(), sample_size()};
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  std::string shape_string() const;
};

// Copies samples [indices] of `src` into a new batch tensor.
Tensor Gather(const Tensor& src, std::span<const int> indices);
// Copies rows [begin, end) of `src`.
Tensor Slice(const Tensor& src, int begin, int end);

}  // namespace tcc

#endif  // TASKCODEC_TENSOR_HPP_
