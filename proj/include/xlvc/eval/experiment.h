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

#ifndef XLVC_EVAL_EXPERIMENT_H_
#define XLVC_EVAL_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xlvc/eval/mcd.h"
#include "xlvc/modnet/training.h"
#include "xlvc/synthcorpus/world.h"

namespace xlvc {

struct ComparisonConfig {
  GenerativeConfig corpus;
  ArchitectureConfig widths;  // variant and dimensions are filled per system
  std::string embedding = "synthetic";
  TrainHyper train;
  ConvertOptions convert;
  McdConfig mcd;
  // Also trains LI with a trunk widened to the LS parameter count.
  bool budget_matched_li = false;

  void Bind(ConfigSchema& schema);
};

struct SystemSpec {
  std::string name;  // e.g. "mPPG-LS"
  PpgKind regime = PpgKind::kMixedLingual;
  Variant variant = Variant::kLS;
  bool budget_matched = false;
};

std::vector<SystemSpec> ComparisonSystems(bool budget_matched_li);

struct CellResult {
  std::string system;
  uint64_t seed = 0;
  Direction direction = Direction::kAtoB;
  bool valid = false;
  double mcd = 0.0;
  double valid_mse = 0.0;
  long long parameters = 0;
  int epochs = 0;
  std::string error;
};

struct SourceBar {
  uint64_t seed = 0;
  Direction direction = Direction::kAtoB;
  double mcd = 0.0;
};

struct ExperimentReport {
  std::vector<uint64_t> seeds;
  std::vector<std::string> systems;
  std::vector<CellResult> cells;
  std::vector<SourceBar> source_bars;
  std::vector<std::pair<uint64_t, double>> rendering_gaps;

  const CellResult* Find(const std::string& system, uint64_t seed, Direction d) const;
  // Mean and sample standard deviation over seeds of valid cells.
  std::pair<double, double> MeanStd(const std::string& system, Direction d) const;
  // Mean over both directions for one seed; NaN when a cell is invalid.
  double SeedMean(const std::string& system, uint64_t seed) const;
};

// Seeds where `better` has the lower two-direction MCD than `worse`, and the
// two-sided sign-test p-value over seeds with a strict difference.
struct SignTest {
  int wins = 0;
  int losses = 0;
  double p_value = 1.0;
};
SignTest CompareSystems(const ExperimentReport& report, const std::string& better, const std::string& worse);

// Directory of one run: <out>/run-<hash of the effective configuration>.
std::filesystem::path RunDirectory(const std::filesystem::path& out, const ComparisonConfig& cfg);

using ProgressFn = std::function<void(const std::string&)>;

// Generates one corpus per seed, trains every system, evaluates both
// directions and writes report.tsv and summary.txt under the run directory.
// Cells already completed in an earlier run are reused.
ExperimentReport RunComparison(const ComparisonConfig& cfg, const std::vector<uint64_t>& seeds,
                               const std::filesystem::path& run_dir, int threads = 1,
                               const ProgressFn& progress = {});

void WriteReportTable(const std::filesystem::path& path, const ExperimentReport& report);
ExperimentReport ReadReportTable(const std::filesystem::path& path);
std::string FormatSummary(const ExperimentReport& report);

// Recomputes every MCD cell and source bar from the persisted converted
// files and corpus references of a run directory.
ExperimentReport RebuildReport(const std::filesystem::path& run_dir, const McdConfig& mcd = {});

}  // namespace xlvc

#endif  // XLVC_EVAL_EXPERIMENT_H_
