// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XLVC_CLI_CLI_H_
#define XLVC_CLI_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xlvc/eval/experiment.h"

namespace xlvc {

// Every key a run accepts. Grammar of the file form:
//
//   # comment
//   section.key = value
//
// Keys not listed here are rejected with their file and line.
struct RunConfig {
  ComparisonConfig experiment;
  uint64_t seed = 1;
  std::string corpus;            // corpus directory for train
  std::string out_root = "runs";  // parent of experiment run directories

  void Bind(ConfigSchema& schema);
};

// Defaults, then `path` (if non-empty), then "key=value" overrides in order.
RunConfig LoadRunConfig(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// "# xlvc <version>" followed by every key with its effective value.
std::string EffectiveConfigText(const RunConfig& cfg);
std::string RunConfigHash(const RunConfig& cfg);

// Entry point of the xlvc tool. `args` excludes the program name. Returns the
// process exit code: 0 success, 1 runtime failure, 2 usage or config error.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xlvc

#endif  // XLVC_CLI_CLI_H_
