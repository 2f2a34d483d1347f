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

#ifndef TVMERGE_TOOLS_CLI_HPP_
#define TVMERGE_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "tvmerge/error.hpp"

namespace tvmerge::cli {

// Stable exit codes.
enum ExitCode : int {
  kOk = 0,
  kValidationError = 2,
  kIoError = 3,
  kUsageError = 4,
  kNumericError = 5,
  kConfigError = 6,
};

int ExitCodeFor(ErrorKind kind);

// Runs one invocation. `args` excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvmerge::cli

#endif  // TVMERGE_TOOLS_CLI_HPP_
