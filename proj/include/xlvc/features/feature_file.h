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

#ifndef XLVC_FEATURES_FEATURE_FILE_H_
#define XLVC_FEATURES_FEATURE_FILE_H_

#include <cstdint>
#include <filesystem>

#include "xlvc/common.h"
#include "xlvc/features/types.h"

namespace xlvc {

// XVCF layout, all integers little-endian:
//   "XVCF" | u16 version (=1) | u16 kind | u32 dim | u32 frames |
//   frames*dim binary32 values, row-major.
inline constexpr uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureFileHeaderBytes = 16;

enum class KindCode : uint16_t {
  kAcoustic = 0,
  kMonoAPpg = 1,
  kMonoBPpg = 2,
  kBilingualPpg = 3,
  kMixedPpg = 4,
  kSpeakerEmbedding = 5,
  kLatentTrajectory = 6,
};

class FeatureFileError : public Error {
 public:
  enum class Code { kIo, kBadMagic, kUnsupportedVersion, kTruncated, kTrailingBytes, kEmptyShape };

  FeatureFileError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct FeatureFile {
  uint16_t kind_code = 0;
  Matrix matrix;
};

// Values are narrowed to binary32 on write.
void WriteFeatureFile(const std::filesystem::path& path, uint16_t kind_code, const Matrix& matrix);
inline void WriteFeatureFile(const std::filesystem::path& path, KindCode kind, const Matrix& matrix) {
  WriteFeatureFile(path, static_cast<uint16_t>(kind), matrix);
}

FeatureFile ReadFeatureFile(const std::filesystem::path& path);

// Reads and checks the kind code.
Matrix ReadFeatureMatrix(const std::filesystem::path& path, KindCode expected);

KindCode PpgKindCode(PpgKind kind);

}  // namespace xlvc

#endif  // XLVC_FEATURES_FEATURE_FILE_H_
