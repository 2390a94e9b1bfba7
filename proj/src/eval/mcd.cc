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

#include "xlvc/eval/mcd.h"

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "xlvc/features/feature_file.h"
#include "xlvc/parallel.h"

namespace xlvc {

namespace fs = std::filesystem;

void McdConfig::Bind(ConfigSchema& s, const std::string& p) {
  s.Bind(p + "mcd_first", &first, "first MCC index in the distortion (0 includes energy)");
  s.Bind(p + "mcd_last", &last, "last MCC index in the distortion (-1 = final coefficient)");
}

std::pair<int, int> McdConfig::Range(int mcc_dim) const {
  const int hi = last < 0 ? mcc_dim - 1 : last;
  if (first < 0 || hi >= mcc_dim || first > hi)
    throw ConfigError("MCD coefficient range [" + std::to_string(first) + ", " + std::to_string(hi) +
                "] is empty or outside 0.." + std::to_string(mcc_dim - 1));
  return {first, hi};
}

double Mcd(const Matrix& converted, const Matrix& reference, const McdConfig& cfg) {
  if (converted.rows() != reference.rows() || converted.cols() != reference.cols())
    throw Error("MCD shape mismatch: " + std::to_string(converted.rows()) + "x" + std::to_string(converted.cols()) +
                " vs " + std::to_string(reference.rows()) + "x" + std::to_string(reference.cols()));
  if (converted.rows() == 0) throw Error("MCD of an empty sequence");
  const auto [lo, hi] = cfg.Range(static_cast<int>(converted.cols()));
  const int n = hi - lo + 1;
  double total = 0.0;
  for (int t = 0; t < converted.rows(); ++t) {
    const double sq = (converted.row(t).segment(lo, n) - reference.row(t).segment(lo, n)).squaredNorm();
    total += kMcdConstant * std::sqrt(2.0 * sq);
  }
  return total / static_cast<double>(converted.rows());
}

std::string_view DirectionName(Direction d) { return d == Direction::kAtoB ? "A2B" : "B2A"; }

Direction ParseDirection(std::string_view name) {
  if (name == "A2B" || name == "a2b") return Direction::kAtoB;
  if (name == "B2A" || name == "b2a") return Direction::kBtoA;
  throw Error("unknown direction '" + std::string(name) + "' (expected A2B or B2A)");
}

std::vector<TestPair> ParallelPairs(const Manifest& test, Direction direction) {
  const LanguageId src = SourceLanguage(direction), tgt = TargetLanguage(direction);
  std::map<std::pair<std::string, std::string>, const UtteranceRecord*> by_content;
  for (const auto& r : test.records) by_content[{r.content_id, r.speaker_id}] = &r;
  const std::vector<std::string> targets = test.Speakers(tgt);
  std::vector<TestPair> pairs;
  for (const auto& r : test.records) {
    if (r.split != Split::kTest || r.language != src || r.content_language() != src) continue;
    for (const auto& spk : targets) {
      auto it = by_content.find({r.content_id, spk});
      if (it == by_content.end())
        throw Error("missing parallel reference: content " + r.content_id + " has no rendering by " + spk);
      pairs.push_back({&r, it->second});
    }
  }
  if (pairs.empty())
    throw Error("test manifest has no " + std::string(DirectionName(direction)) + " parallel pairs");
  return pairs;
}

fs::path ConvertedFileName(const TestPair& p) {
  return p.source->utterance_id + "--" + p.reference->speaker_id + ".xvcf";
}

namespace {

Matrix MccStatics(const Matrix& acoustic) {
  const AcousticLayout layout = AcousticLayout::FromWidth(static_cast<int>(acoustic.cols()));
  return acoustic.middleCols(layout.mcc(), layout.mcc_dim);
}

SystemEvaluation Finish(Direction direction, std::vector<McdRow> rows) {
  SystemEvaluation e;
  e.direction = direction;
  double sum = 0.0;
  for (const auto& r : rows) sum += r.mcd;
  e.mean_mcd = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
  e.rows = std::move(rows);
  return e;
}

}  // namespace

SystemEvaluation EvaluateWithConverter(const Manifest& test, Direction direction, const Converter& convert,
                                       const McdConfig& mcd, int threads) {
  const std::vector<TestPair> pairs = ParallelPairs(test, direction);
  std::vector<McdRow> rows(pairs.size());
  ParallelFor(static_cast<int>(pairs.size()), threads, [&](int i) {
    const TestPair& p = pairs[i];
    const Matrix reference = ReadFeatureMatrix(test.Resolve(p.reference->acoustic_path), KindCode::kAcoustic);
    const Matrix converted = convert(p);
    McdRow& row = rows[i];
    row.source_utterance = p.source->utterance_id;
    row.target_speaker = p.reference->speaker_id;
    row.reference_utterance = p.reference->utterance_id;
    row.frames = static_cast<int>(reference.rows());
    row.mcd = Mcd(MccStatics(converted), MccStatics(reference), mcd);
  });
  return Finish(direction, std::move(rows));
}

SystemEvaluation EvaluateSystem(const TrainedModel& model, const Manifest& test, Direction direction,
                                const EvalOptions& options) {
  if (test.regime != model.regime)
    throw Error("regime mismatch: checkpoint was trained on " + std::string(PpgKindName(model.regime)) +
                " posteriorgrams, test manifest provides " + std::string(PpgKindName(test.regime)));
  const ConversionContext context(model);
  std::mutex log_mutex;
  std::map<std::string, std::string> log_lines;
  if (!options.output_dir.empty()) fs::create_directories(options.output_dir);
  const Converter convert = [&](const TestPair& p) {
    const fs::path out = options.output_dir.empty() ? fs::path() : options.output_dir / ConvertedFileName(p);
    ConversionLogRecord log;
    ConvertedUtterance c =
        ConvertUtterance(context, test, *p.source, p.reference->speaker_id, out, options.convert, &log);
    std::lock_guard<std::mutex> lock(log_mutex);
    log_lines[ConvertedFileName(p).string()] = FormatConversionLog(log);
    // Score the float32 values that are persisted so reports rebuild exactly.
    return Matrix(c.acoustic.cast<float>().cast<double>());
  };
  SystemEvaluation e = EvaluateWithConverter(test, direction, convert, options.mcd, options.threads);
  if (!options.output_dir.empty()) {
    std::ofstream log(options.output_dir / "conversion.log", std::ios::trunc);
    for (const auto& [name, line] : log_lines) log << line << '\n';
    if (!log) throw Error("cannot write conversion log in " + options.output_dir.string());
  }
  return e;
}

SystemEvaluation SourceReferenceMcd(const Manifest& test, Direction direction, const McdConfig& mcd) {
  return EvaluateWithConverter(
      test, direction,
      [&](const TestPair& p) { return ReadFeatureMatrix(test.Resolve(p.source->acoustic_path), KindCode::kAcoustic); },
      mcd);
}

void WriteMcdTable(const fs::path& path, const SystemEvaluation& e) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "# direction=" << DirectionName(e.direction) << " mean_mcd=" << FormatDouble(e.mean_mcd) << '\n';
  out << "source\ttarget_speaker\treference\tframes\tmcd\n";
  for (const auto& r : e.rows)
    out << r.source_utterance << '\t' << r.target_speaker << '\t' << r.reference_utterance << '\t' << r.frames
        << '\t' << FormatDouble(r.mcd) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

SystemEvaluation ReadMcdTable(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  Direction direction = Direction::kAtoB;
  std::vector<McdRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# direction=", 0) == 0) {
      direction = ParseDirection(line.substr(12, 3));
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream ss(line);
    McdRow r;
    std::string mcd;
    if (!(ss >> r.source_utterance >> r.target_speaker >> r.reference_utterance >> r.frames >> mcd))
      throw Error(path.string() + ": malformed row '" + line + "'");
    r.mcd = std::stod(mcd);
    rows.push_back(std::move(r));
  }
  return Finish(direction, std::move(rows));
}

}  // namespace xlvc
