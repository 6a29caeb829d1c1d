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

#ifndef TASKCODEC_ERROR_HPP_
#define TASKCODEC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tcc {

// Numeric values are shared with the C API status codes.
enum class ErrorCode : int {
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kFormat = 4,
  kWrongModel = 5,
  kIo = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace tcc

#endif  // TASKCODEC_ERROR_HPP_
