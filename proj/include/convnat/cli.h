// Copyright 2026 The ConvNat Authors. All Rights Reserved.
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

#ifndef CONVNAT_CLI_H_
#define CONVNAT_CLI_H_

#include <filesystem>

namespace convnat {

// Entry point of the `convnat` command. Returns the process exit status:
// 0 success, 1 validation or domain error, 2 usage error.
int RunCli(int argc, const char* const* argv);

// Resolves a checkpoint path: either a directory holding state.json or a run
// directory whose selected.json names the selected checkpoint.
std::filesystem::path ResolveCheckpoint(const std::filesystem::path& path);

}  // namespace convnat

#endif  // CONVNAT_CLI_H_
