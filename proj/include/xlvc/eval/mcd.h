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

#ifndef XLVC_EVAL_MCD_H_
#define XLVC_EVAL_MCD_H_

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xlvc/features/manifest.h"
#include "xlvc/generation/convert.h"

namespace xlvc {

inline const double kMcdConstant = 10.0 / std::log(10.0);

// Coefficient indices [first, last] of the MCC statics entering the
// distance. last < 0 means the final coefficient.
struct McdConfig {
  int first = 1;
  int last = -1;

  void Bind(ConfigSchema& schema, const std::string& prefix);
  // Resolved inclusive range for mcc_dim coefficients; throws when empty.
  std::pair<int, int> Range(int mcc_dim) const;
};

// Mean over frames of K * sqrt(2 * sum_d (x_d - y_d)^2). Inputs are T x D
// MCC statics.
double Mcd(const Matrix& converted, const Matrix& reference, const McdConfig& cfg = {});

enum class Direction { kAtoB, kBtoA };
std::string_view DirectionName(Direction d);  // "A2B" / "B2A"
Direction ParseDirection(std::string_view name);
inline LanguageId SourceLanguage(Direction d) { return d == Direction::kAtoB ? LanguageId::kA : LanguageId::kB; }
inline LanguageId TargetLanguage(Direction d) { return OtherLanguage(SourceLanguage(d)); }

// One parallel test pair: source utterance, target speaker, and the target
// speaker's rendering of the same content.
struct TestPair {
  const UtteranceRecord* source = nullptr;
  const UtteranceRecord* reference = nullptr;
};

// Every source-language rendering of source-language content, paired with
// every target-language speaker's rendering of that content.
std::vector<TestPair> ParallelPairs(const Manifest& test, Direction direction);

struct McdRow {
  std::string source_utterance;
  std::string target_speaker;
  std::string reference_utterance;
  int frames = 0;
  double mcd = 0.0;
};

struct SystemEvaluation {
  Direction direction = Direction::kAtoB;
  double mean_mcd = 0.0;
  std::vector<McdRow> rows;
};

// Produces the full converted acoustic matrix for a pair.
using Converter = std::function<Matrix(const TestPair& pair)>;

SystemEvaluation EvaluateWithConverter(const Manifest& test, Direction direction, const Converter& convert,
                                       const McdConfig& mcd = {}, int threads = 1);

struct EvalOptions {
  McdConfig mcd;
  ConvertOptions convert;
  // When set, converted files are written to <output_dir>/<source>--<target>.xvcf
  // and a conversion.log is appended.
  std::filesystem::path output_dir;
  int threads = 1;
};

SystemEvaluation EvaluateSystem(const TrainedModel& model, const Manifest& test, Direction direction,
                                const EvalOptions& options = {});

// The unconverted source against the target rendering of the same content.
SystemEvaluation SourceReferenceMcd(const Manifest& test, Direction direction, const McdConfig& mcd = {});

void WriteMcdTable(const std::filesystem::path& path, const SystemEvaluation& eval);
SystemEvaluation ReadMcdTable(const std::filesystem::path& path);

std::filesystem::path ConvertedFileName(const TestPair& pair);

}  // namespace xlvc

#endif  // XLVC_EVAL_MCD_H_
