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

#ifndef XLVC_FEATURES_TYPES_H_
#define XLVC_FEATURES_TYPES_H_

#include <string>
#include <string_view>
#include <vector>

#include "xlvc/common.h"

namespace xlvc {

enum class LanguageId : int { kA = 0, kB = 1 };

inline constexpr int kNumLanguages = 2;

std::string_view LanguageName(LanguageId lang);
LanguageId ParseLanguage(std::string_view name);
inline LanguageId OtherLanguage(LanguageId lang) {
  return lang == LanguageId::kA ? LanguageId::kB : LanguageId::kA;
}

enum class PpgKind { kMonoA, kMonoB, kBilingualStacked, kMixedLingual };

// "monoA", "monoB", "bppg", "mppg".
std::string_view PpgKindName(PpgKind kind);
PpgKind ParsePpgKind(std::string_view name);

// Per-frame phone posteriors. For kBilingualStacked the first `block_a_dim`
// columns are the language-A block and the rest the language-B block.
struct Posteriorgram {
  PpgKind kind = PpgKind::kMixedLingual;
  int block_a_dim = 0;
  Matrix frames;

  int dim() const { return static_cast<int>(frames.cols()); }
  int num_frames() const { return static_cast<int>(frames.rows()); }
};

struct PosteriorgramViolation {
  int frame = 0;
  // -1 for the whole row, 0 for block A, 1 for block B.
  int block = -1;
  double observed_sum = 0.0;
  std::string message;
};

// Returns one entry per frame/block whose sum or range breaks the invariant
// for p.kind. Stacked blocks are checked individually against `tol`.
std::vector<PosteriorgramViolation> ValidatePosteriorgram(const Posteriorgram& p,
                                                          double tol);

struct SpeakerEmbedding {
  std::string speaker_id;
  Vector values;

  int dim() const { return static_cast<int>(values.size()); }
};

// Column layout of an acoustic frame:
//   vuv | mcc | d mcc | dd mcc | lf0 | d lf0 | dd lf0 | ap | d ap | dd ap
struct AcousticLayout {
  int mcc_dim = 12;

  int width() const { return 3 * mcc_dim + 7; }
  int vuv() const { return 0; }
  int mcc() const { return 1; }
  int delta_mcc() const { return 1 + mcc_dim; }
  int delta2_mcc() const { return 1 + 2 * mcc_dim; }
  int lf0() const { return 1 + 3 * mcc_dim; }
  int ap() const { return 4 + 3 * mcc_dim; }

  static AcousticLayout FromWidth(int width);
};

// Row-wise concatenation [ppg_t | spk]. The embedding block repeats on every row.
Matrix BuildInputFrames(const Matrix& ppg, const SpeakerEmbedding& spk);

}  // namespace xlvc

#endif  // XLVC_FEATURES_TYPES_H_
