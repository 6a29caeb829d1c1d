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

#ifndef TASKCODEC_TESTS_TEST_UTIL_HPP_
#define TASKCODEC_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "taskcodec/error.hpp"
#include "taskcodec/tensor.hpp"

namespace tcc::testing {

inline Tensor RandomTensor(int n, int c, int h, int w, std::mt19937_64& rng,
                           double lo = -1.0, double hi = 1.0) {
  Tensor t(n, c, h, w);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.v) v = u(rng);
  return t;
}

inline double Dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

// Central difference of f at x[i].
inline double CentralDiff(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double orig = x;
  x = orig + h;
  const double fp = f();
  x = orig - h;
  const double fm = f();
  x = orig;
  return (fp - fm) / (2 * h);
}

inline double RelErr(double a, double b, double floor = 1e-7) {
  return std::fabs(a - b) / std::max(floor, std::max(std::fabs(a), std::fabs(b)));
}

// Error code thrown by f, kInternal when nothing is thrown.
inline ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("taskcodec_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf = {}) const {
    return leaf.empty() ? path_.string() : (path_ / leaf).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace tcc::testing

#endif  // TASKCODEC_TESTS_TEST_UTIL_HPP_
