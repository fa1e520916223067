// Copyright 2026 The maftprep Authors.
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

#ifndef MAFTPREP_TOOLS_CLI_H_
#define MAFTPREP_TOOLS_CLI_H_

namespace maftprep::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitMismatch = 5;

// Entry point shared by the binary and in-process tests.
int Run(int argc, const char* const* argv);

}  // namespace maftprep::cli

#endif  // MAFTPREP_TOOLS_CLI_H_
