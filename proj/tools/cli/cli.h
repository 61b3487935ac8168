// Copyright 2026 The KAHM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KAHM_TOOLS_CLI_H_
#define KAHM_TOOLS_CLI_H_

#include <string>
#include <vector>

namespace kahm::cli {

// Runs the kahm command line; returns the process exit code. Diagnostics go
// to stderr.
int Run(int argc, const char* const* argv);
// Same, with the arguments after the program name.
int Run(const std::vector<std::string>& args);

}  // namespace kahm::cli

#endif  // KAHM_TOOLS_CLI_H_
