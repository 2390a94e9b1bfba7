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

#include "xlvc/features/manifest.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "xlvc/features/feature_file.h"

namespace xlvc {

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error("unknown split '" + std::string(name) + "'");
}

LanguageId UtteranceRecord::content_language() const {
  if (content_id.empty()) return language;
  return ParseLanguage(content_id.substr(0, 1));
}

std::filesystem::path Manifest::Resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : root / p;
}

std::vector<const UtteranceRecord*> Manifest::Select(std::optional<Split> split,
                                                     std::optional<LanguageId> lang) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : records)
    if ((!split || r.split == *split) && (!lang || r.language == *lang)) out.push_back(&r);
  return out;
}

std::vector<std::string> Manifest::Speakers(std::optional<LanguageId> lang) const {
  std::vector<std::string> out;
  for (const auto& r : records)
    if ((!lang || r.language == *lang) && std::find(out.begin(), out.end(), r.speaker_id) == out.end())
      out.push_back(r.speaker_id);
  return out;
}

const UtteranceRecord* Manifest::Find(const std::string& utterance_id) const {
  for (const auto& r : records)
    if (r.utterance_id == utterance_id) return &r;
  return nullptr;
}

std::string FormatRecord(const UtteranceRecord& r) {
  std::ostringstream os;
  os << "utt=" << r.utterance_id << " spk=" << r.speaker_id << " lang=" << LanguageName(r.language)
     << " split=" << SplitName(r.split) << " content=" << r.content_id << " frames=" << r.frames
     << " ppg=" << r.ppg_path.generic_string() << " acoustic=" << r.acoustic_path.generic_string()
     << " latent=" << r.latent_path.generic_string();
  return os.str();
}

UtteranceRecord ParseRecord(const std::string& line) {
  std::map<std::string, std::string> fields;
  std::istringstream is(line);
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("malformed manifest field '" + token + "'");
    if (!fields.emplace(token.substr(0, eq), token.substr(eq + 1)).second)
      throw Error("duplicate manifest field '" + token.substr(0, eq) + "'");
  }
  auto take = [&](const char* key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(std::string("manifest record missing '") + key + "'");
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  UtteranceRecord r;
  r.utterance_id = take("utt");
  r.speaker_id = take("spk");
  r.language = ParseLanguage(take("lang"));
  r.split = ParseSplit(take("split"));
  r.content_id = take("content");
  r.frames = std::stoi(take("frames"));
  r.ppg_path = take("ppg");
  r.acoustic_path = take("acoustic");
  r.latent_path = take("latent");
  if (!fields.empty()) throw Error("unknown manifest field '" + fields.begin()->first + "'");
  if (r.frames < 1) throw Error("manifest record " + r.utterance_id + " has no frames");
  return r;
}

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write manifest " + path.string());
  os << "# xlvc-manifest 1\n# regime=" << PpgKindName(manifest.regime) << "\n";
  for (const auto& r : manifest.records) os << FormatRecord(r) << "\n";
  if (!os) throw Error("write failed: " + path.string());
}

Manifest ReadManifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  bool saw_regime = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("regime=");
      if (pos != std::string::npos) {
        m.regime = ParsePpgKind(line.substr(pos + 7));
        saw_regime = true;
      }
      continue;
    }
    try {
      m.records.push_back(ParseRecord(line));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!saw_regime) throw Error(path.string() + ": missing '# regime=' header");
  return m;
}

std::vector<std::string> VerifyManifest(const Manifest& manifest) {
  std::vector<std::string> problems;
  for (const auto& r : manifest.records) {
    for (const auto* p : {&r.ppg_path, &r.acoustic_path, &r.latent_path}) {
      try {
        const FeatureFile f = ReadFeatureFile(manifest.Resolve(*p));
        if (f.matrix.rows() != r.frames)
          problems.push_back(r.utterance_id + ": " + p->string() + " has " + std::to_string(f.matrix.rows()) +
                             " frames, manifest says " + std::to_string(r.frames));
      } catch (const std::exception& e) {
        problems.push_back(r.utterance_id + ": " + e.what());
      }
    }
  }
  return problems;
}

}  // namespace xlvc
