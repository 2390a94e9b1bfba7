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

#ifndef XLVC_SYNTHCORPUS_WORLD_H_
#define XLVC_SYNTHCORPUS_WORLD_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xlvc/common.h"
#include "xlvc/config.h"
#include "xlvc/features/types.h"

namespace xlvc {

struct GenerativeConfig {
  int latent_dim = 12;
  int phones_a = 20;
  int phones_b = 24;
  int mcc_dim = 12;
  int spk_dim = 16;
  int speakers_per_language = 4;
  int utterances_per_speaker = 30;
  int validation_per_speaker = 5;
  int test_contents_per_language = 5;
  int min_frames = 150;
  int max_frames = 250;
  int min_phone_frames = 5;
  int max_phone_frames = 15;
  double temperature = 0.5;
  double noise_sigma = 0.05;
  double smoothing = 0.7;
  double latent_jitter = 0.01;
  double anchor_spread = 0.35;
  double articulation_gain = 1.5;
  double speaker_scale = 0.5;
  // 0 gives identical renderings, 1 draws the two matrices independently.
  double language_divergence = 1.0;
  uint64_t seed = 1;

  void Bind(ConfigSchema& schema, const std::string& prefix);
  void Validate() const;
  int union_dim() const { return phones_a + phones_b + 1; }
  int dim_a() const { return phones_a + 1; }
  int dim_b() const { return phones_b + 1; }
};

// Ground-truth generative process shared by all utterances of one corpus.
// Anchor rows are ordered: language-A phones, language-B phones, silence.
class WorldModel {
 public:
  static WorldModel Build(const GenerativeConfig& cfg);

  const GenerativeConfig& config() const { return cfg_; }
  const Matrix& anchors() const { return anchors_; }
  int silence_index() const { return static_cast<int>(anchors_.rows()) - 1; }
  int phone_begin(LanguageId lang) const { return lang == LanguageId::kA ? 0 : cfg_.phones_a; }
  int phone_count(LanguageId lang) const { return lang == LanguageId::kA ? cfg_.phones_a : cfg_.phones_b; }

  // h(z) = tanh(G z + c), applied per frame.
  Matrix Articulate(const Matrix& latent) const;
  const Matrix& rendering(LanguageId lang) const { return rendering_[static_cast<int>(lang)]; }
  Matrix speaker_map() const { return speaker_map_; }
  // Spectral norm of R_A - R_B.
  double RenderingGap() const;

  double PitchContour(LanguageId lang, const RowVector& z) const;
  double Aperiodicity(const RowVector& z) const;
  double BaseLogF0(const std::string& speaker_id) const;

 private:
  GenerativeConfig cfg_;
  Matrix anchors_;
  Matrix articulation_;
  Vector articulation_bias_;
  Matrix rendering_[kNumLanguages];
  Matrix speaker_map_;
  Vector pitch_direction_;
  double pitch_amplitude_[kNumLanguages] = {0.0, 0.0};
  Vector ap_direction_;
};

// A sampled latent trajectory with its per-frame target anchor.
struct UtteranceContent {
  LanguageId language = LanguageId::kA;
  Matrix latent;
  std::vector<int> target_anchor;

  int frames() const { return static_cast<int>(latent.rows()); }
  Vector Voicing(int silence_index) const;
};

UtteranceContent SampleContent(const WorldModel& world, LanguageId lang, std::mt19937_64& rng);

// Renders acoustic frames (layout AcousticLayout{mcc_dim}) for `content`
// spoken by a speaker of `render_lang` with identity vector `speaker`.
Matrix RenderAcoustic(const WorldModel& world, const UtteranceContent& content, LanguageId render_lang,
                      const SpeakerEmbedding& speaker, std::mt19937_64& noise_rng);

// Distance-softmax posteriors of a latent trajectory under `regime`.
Posteriorgram ExtractPpg(const Matrix& latent, PpgKind regime, const WorldModel& world, double temperature);

}  // namespace xlvc

#endif  // XLVC_SYNTHCORPUS_WORLD_H_
