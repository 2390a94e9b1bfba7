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

#ifndef XLVC_GENERATION_CONVERT_H_
#define XLVC_GENERATION_CONVERT_H_

#include <filesystem>
#include <map>
#include <string>

#include "xlvc/features/manifest.h"
#include "xlvc/generation/parameter_generation.h"
#include "xlvc/modnet/training.h"

namespace xlvc {

struct ConvertOptions {
  double postfilter_beta = 1.4;

  void Bind(ConfigSchema& schema, const std::string& prefix);
};

struct ConvertedUtterance {
  Matrix acoustic;   // assembled output, AcousticLayout of the model
  Matrix predicted;  // de-standardized network output before generation
  F0Stats source_f0;
};

// Runs the generation pipeline on one source utterance. `source_ppg` must be
// in the model's regime and `source_acoustic` supplies F0 statistics and the
// aperiodicity channels. `target_lang` selects the output head.
ConvertedUtterance ConvertFeatures(const TrainedModel& model, const Matrix& source_ppg,
                                   const Matrix& source_acoustic, const SpeakerEmbedding& target,
                                   const F0Stats& target_f0, LanguageId target_lang,
                                   const ConvertOptions& options = {});

// F0 statistics over every training utterance of `speaker_id`.
F0Stats SpeakerF0Stats(const Manifest& manifest, const std::string& speaker_id);

// Per-model lookup of target speaker embeddings and F0 statistics, both taken
// from the manifest the model was trained on.
class ConversionContext {
 public:
  explicit ConversionContext(const TrainedModel& model);
  ConversionContext(const TrainedModel& model, Manifest training);

  const TrainedModel& model() const { return *model_; }
  const Manifest& training() const { return training_; }
  const SpeakerEmbedding& Embedding(const std::string& speaker_id) const;
  const F0Stats& TargetF0(const std::string& speaker_id) const;
  LanguageId SpeakerLanguage(const std::string& speaker_id) const;

 private:
  const TrainedModel* model_;
  Manifest training_;
  std::map<std::string, SpeakerEmbedding> embeddings_;
  std::map<std::string, F0Stats> f0_;
  std::map<std::string, LanguageId> language_;
};

struct ConversionLogRecord {
  std::string source_utterance;
  std::string target_speaker;
  LanguageId target_language = LanguageId::kA;
  PpgKind regime = PpgKind::kMixedLingual;
  std::string checkpoint_hash;
  std::filesystem::path output;
};

// One line: "source=<utt> target=<spk> lang=<A|B> regime=<r> checkpoint=<hash> output=<path>".
std::string FormatConversionLog(const ConversionLogRecord& r);

// Converts `source` (a record of `source_manifest`) to `target_speaker`,
// speaking that speaker's language, and writes an acoustic XVCF file to
// `output`. Errors carry the failing stage.
ConvertedUtterance ConvertUtterance(const ConversionContext& context, const Manifest& source_manifest,
                                    const UtteranceRecord& source, const std::string& target_speaker,
                                    const std::filesystem::path& output, const ConvertOptions& options = {},
                                    ConversionLogRecord* log = nullptr);

}  // namespace xlvc

#endif  // XLVC_GENERATION_CONVERT_H_
