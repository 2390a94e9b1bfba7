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

#ifndef XLVC_SYNTHCORPUS_SPEAKER_EMBEDDING_H_
#define XLVC_SYNTHCORPUS_SPEAKER_EMBEDDING_H_

#include <cstdint>
#include <string>

#include "xlvc/features/manifest.h"
#include "xlvc/features/types.h"

namespace xlvc {

enum class EmbeddingMode { kSynthetic, kMccStats };

std::string_view EmbeddingModeName(EmbeddingMode mode);
EmbeddingMode ParseEmbeddingMode(std::string_view name);

// Unit-norm pseudo-random vector keyed by (speaker_id, seed).
SpeakerEmbedding SyntheticSpeakerEmbedding(const std::string& speaker_id, int dim, uint64_t seed);

// Mean and standard deviation of the MCC statics over the speaker's training
// utterances, zero-padded or truncated to `dim`, then unit-normalized.
SpeakerEmbedding MccStatsSpeakerEmbedding(const std::string& speaker_id, const Manifest& manifest, int dim);

// Dispatches on mode; `manifest` is only consulted for kMccStats.
SpeakerEmbedding ProvideSpeakerEmbedding(const std::string& speaker_id, EmbeddingMode mode, int dim,
                                         uint64_t seed, const Manifest& manifest);

}  // namespace xlvc

#endif  // XLVC_SYNTHCORPUS_SPEAKER_EMBEDDING_H_
