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

#ifndef XLVC_NETCORE_CHECKPOINT_H_
#define XLVC_NETCORE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xlvc/netcore/param_store.h"

namespace xlvc {

// Text header followed by raw tensor data:
//
//   xlvc-checkpoint 1
//   seed <u64>
//   config_hash <hex>
//   meta <key> <value to end of line>      (zero or more)
//   tensor <name> <rows> <cols>            (zero or more, declaration order)
//   end
//   <binary64 little-endian values, row-major, tensors in header order>
struct Checkpoint {
  uint64_t seed = 0;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  void SetMeta(const std::string& key, const std::string& value);
  std::optional<std::string> FindMeta(const std::string& key) const;
  const std::string& Meta(const std::string& key) const;

  void AddTensor(const std::string& name, Matrix value);
  const Matrix* FindTensor(const std::string& name) const;
  const Matrix& Tensor(const std::string& name) const;

  // Stores every tensor of `params` as "<prefix><name>".
  void AddParams(const ParamStore& params, const std::string& prefix = "");
  // Fills every tensor of `params` from "<prefix><name>"; shapes must match.
  void LoadParams(ParamStore& params, const std::string& prefix = "") const;
};

void WriteCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

}  // namespace xlvc

#endif  // XLVC_NETCORE_CHECKPOINT_H_
