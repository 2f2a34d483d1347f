/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TVMERGE_ERROR_HPP_
#define TVMERGE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tvmerge {

// Broad failure classes. The CLI maps each one onto a stable exit code.
enum class ErrorKind {
  kValidation,  // shape mismatch, bad budgets, out-of-range arguments
  kIo,          // missing/unwritable files
  kFormat,      // malformed TVC1 stream
  kUsage,       // incompatible options
  kNumeric,     // degenerate numeric input (zero-norm mean, singular system)
  kConfig,      // malformed JSON configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace tvmerge

#endif  // TVMERGE_ERROR_HPP_
