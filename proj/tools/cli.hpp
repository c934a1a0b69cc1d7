// Copyright 2026 The TGB Authors. All Rights Reserved.
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

#ifndef TGB_TOOLS_CLI_HPP_
#define TGB_TOOLS_CLI_HPP_

#include <iosfwd>

namespace tgb::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNonFinite = 4,
  kExitCheckpoint = 5,
  kExitGradcheck = 6,
};

// Entry point of the `tgb` tool. JSON results go to `out`, diagnostics to
// `err`; the return value is the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tgb::cli

#endif  // TGB_TOOLS_CLI_HPP_
