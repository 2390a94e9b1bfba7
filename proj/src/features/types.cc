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

#include "xlvc/features/types.h"

#include <cmath>
#include <cstdio>

namespace xlvc {

std::string HexDigest(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view LanguageName(LanguageId lang) { return lang == LanguageId::kA ? "A" : "B"; }

LanguageId ParseLanguage(std::string_view name) {
  if (name == "A") return LanguageId::kA;
  if (name == "B") return LanguageId::kB;
  throw Error("unknown language '" + std::string(name) + "' (expected A or B)");
}

std::string_view PpgKindName(PpgKind kind) {
  switch (kind) {
    case PpgKind::kMonoA: return "monoA";
    case PpgKind::kMonoB: return "monoB";
    case PpgKind::kBilingualStacked: return "bppg";
    case PpgKind::kMixedLingual: return "mppg";
  }
  return "?";
}

PpgKind ParsePpgKind(std::string_view name) {
  if (name == "monoA") return PpgKind::kMonoA;
  if (name == "monoB") return PpgKind::kMonoB;
  if (name == "bppg") return PpgKind::kBilingualStacked;
  if (name == "mppg") return PpgKind::kMixedLingual;
  throw Error("unknown PPG regime '" + std::string(name) + "' (expected bppg, mppg, monoA, monoB)");
}

AcousticLayout AcousticLayout::FromWidth(int width) {
  if (width < 10 || (width - 7) % 3 != 0)
    throw Error("acoustic width " + std::to_string(width) + " is not 3*D+7");
  return AcousticLayout{(width - 7) / 3};
}

namespace {

void CheckBlock(const Matrix& frames, int t, int begin, int end, int block, double tol,
                std::vector<PosteriorgramViolation>& out) {
  double sum = 0.0;
  bool in_range = true;
  for (int k = begin; k < end; ++k) {
    const double v = frames(t, k);
    sum += v;
    if (!(v >= 0.0 && v <= 1.0)) in_range = false;
  }
  if (!in_range) {
    out.push_back({t, block, sum, "entry outside [0, 1]"});
  } else if (!(std::abs(sum - 1.0) <= tol)) {
    out.push_back({t, block, sum, "row sum differs from 1"});
  }
}

}  // namespace

std::vector<PosteriorgramViolation> ValidatePosteriorgram(const Posteriorgram& p, double tol) {
  std::vector<PosteriorgramViolation> out;
  const int dim = p.dim();
  if (p.kind == PpgKind::kBilingualStacked) {
    if (p.block_a_dim <= 0 || p.block_a_dim >= dim) {
      out.push_back({0, -1, 0.0, "stacked block split " + std::to_string(p.block_a_dim) +
                                     " invalid for dim " + std::to_string(dim)});
      return out;
    }
    for (int t = 0; t < p.num_frames(); ++t) {
      CheckBlock(p.frames, t, 0, p.block_a_dim, 0, tol, out);
      CheckBlock(p.frames, t, p.block_a_dim, dim, 1, tol, out);
    }
  } else {
    for (int t = 0; t < p.num_frames(); ++t) CheckBlock(p.frames, t, 0, dim, -1, tol, out);
  }
  return out;
}

Matrix BuildInputFrames(const Matrix& ppg, const SpeakerEmbedding& spk) {
  Matrix x(ppg.rows(), ppg.cols() + spk.dim());
  x.leftCols(ppg.cols()) = ppg;
  x.rightCols(spk.dim()) = spk.values.transpose().replicate(ppg.rows(), 1);
  return x;
}

}  // namespace xlvc
