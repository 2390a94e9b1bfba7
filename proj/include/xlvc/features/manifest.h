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

#ifndef XLVC_FEATURES_MANIFEST_H_
#define XLVC_FEATURES_MANIFEST_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xlvc/features/types.h"

namespace xlvc {

enum class Split { kTrain, kValidation, kTest };

std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

// One manifest line. Paths are stored relative to the manifest directory.
//
//   utt=<id> spk=<id> lang=A|B split=train|valid|test content=<id> frames=<T>
//   ppg=<path> acoustic=<path> latent=<path>
//
// `content` starts with the language letter of the content ("A-..."); test
// renderings of one content by different speakers share the content id.
struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  LanguageId language = LanguageId::kA;
  Split split = Split::kTrain;
  std::string content_id;
  int frames = 0;
  std::filesystem::path ppg_path;
  std::filesystem::path acoustic_path;
  std::filesystem::path latent_path;

  LanguageId content_language() const;
};

struct Manifest {
  std::filesystem::path root;  // directory relative paths resolve against
  PpgKind regime = PpgKind::kMixedLingual;
  std::vector<UtteranceRecord> records;

  std::filesystem::path Resolve(const std::filesystem::path& p) const;
  std::vector<const UtteranceRecord*> Select(std::optional<Split> split,
                                             std::optional<LanguageId> lang = std::nullopt) const;
  std::vector<std::string> Speakers(std::optional<LanguageId> lang = std::nullopt) const;
  const UtteranceRecord* Find(const std::string& utterance_id) const;
};

std::string FormatRecord(const UtteranceRecord& r);
UtteranceRecord ParseRecord(const std::string& line);

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest ReadManifest(const std::filesystem::path& path);

// Opens every referenced file and checks the frame counts agree. Returns a
// description per problem found; empty means consistent.
std::vector<std::string> VerifyManifest(const Manifest& manifest);

}  // namespace xlvc

#endif  // XLVC_FEATURES_MANIFEST_H_
