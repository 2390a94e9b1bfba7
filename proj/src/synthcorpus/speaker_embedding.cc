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

#include "xlvc/synthcorpus/speaker_embedding.h"

#include "xlvc/features/feature_file.h"
#include "xlvc/rng.h"

namespace xlvc {

std::string_view EmbeddingModeName(EmbeddingMode mode) {
  return mode == EmbeddingMode::kSynthetic ? "synthetic" : "mcc_stats";
}

EmbeddingMode ParseEmbeddingMode(std::string_view name) {
  if (name == "synthetic") return EmbeddingMode::kSynthetic;
  if (name == "mcc_stats") return EmbeddingMode::kMccStats;
  throw Error("unknown embedding mode '" + std::string(name) + "' (expected synthetic or mcc_stats)");
}

SpeakerEmbedding SyntheticSpeakerEmbedding(const std::string& speaker_id, int dim, uint64_t seed) {
  if (dim < 1) throw Error("speaker embedding dim must be >= 1");
  auto rng = MakeStream(seed, 0x73706bULL, StringKey(speaker_id));
  Vector v = RandomNormal(rng, dim, 1).col(0);
  return SpeakerEmbedding{speaker_id, v / v.norm()};
}

SpeakerEmbedding MccStatsSpeakerEmbedding(const std::string& speaker_id, const Manifest& manifest, int dim) {
  if (dim < 1) throw Error("speaker embedding dim must be >= 1");
  Vector sum, sum_sq;
  long long frames = 0;
  int mcc_dim = 0;
  for (const UtteranceRecord* r : manifest.Select(Split::kTrain)) {
    if (r->speaker_id != speaker_id) continue;
    const Matrix acoustic = ReadFeatureMatrix(manifest.Resolve(r->acoustic_path), KindCode::kAcoustic);
    const AcousticLayout layout = AcousticLayout::FromWidth(static_cast<int>(acoustic.cols()));
    if (frames == 0) {
      mcc_dim = layout.mcc_dim;
      sum = Vector::Zero(mcc_dim);
      sum_sq = Vector::Zero(mcc_dim);
    }
    const auto mcc = acoustic.middleCols(layout.mcc(), mcc_dim);
    sum += mcc.colwise().sum().transpose();
    sum_sq += mcc.array().square().colwise().sum().matrix().transpose();
    frames += acoustic.rows();
  }
  if (frames == 0) throw Error("mcc_stats embedding: no training utterances for speaker '" + speaker_id + "'");
  const Vector mean = sum / static_cast<double>(frames);
  const Vector var = (sum_sq / static_cast<double>(frames) - mean.cwiseProduct(mean)).cwiseMax(0.0);
  Vector stats(2 * mcc_dim);
  stats << mean, var.cwiseSqrt();
  Vector v = Vector::Zero(dim);
  const int n = std::min<int>(dim, static_cast<int>(stats.size()));
  v.head(n) = stats.head(n);
  const double norm = v.norm();
  if (!(norm > 0.0)) throw Error("mcc_stats embedding: zero statistics for speaker '" + speaker_id + "'");
  return SpeakerEmbedding{speaker_id, v / norm};
}

SpeakerEmbedding ProvideSpeakerEmbedding(const std::string& speaker_id, EmbeddingMode mode, int dim,
                                         uint64_t seed, const Manifest& manifest) {
  return mode == EmbeddingMode::kSynthetic ? SyntheticSpeakerEmbedding(speaker_id, dim, seed)
                                           : MccStatsSpeakerEmbedding(speaker_id, manifest, dim);
}

}  // namespace xlvc
