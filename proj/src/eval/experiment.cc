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

#include "xlvc/eval/experiment.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <cctype>
#include <map>
#include <memory>
#include <sstream>

#include "xlvc/features/feature_file.h"
#include "xlvc/synthcorpus/corpus.h"

namespace xlvc {

namespace fs = std::filesystem;

namespace {

constexpr Direction kDirections[] = {Direction::kAtoB, Direction::kBtoA};

fs::path SeedDir(const fs::path& run, uint64_t seed) { return run / ("seed-" + std::to_string(seed)); }

std::string CellDirName(const std::string& system) {
  std::string s;
  for (char c : system) s += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string CellLine(const CellResult& c) {
  return "cell\t" + c.system + '\t' + std::to_string(c.seed) + '\t' + std::string(DirectionName(c.direction)) +
         '\t' + (c.valid ? "ok" : "invalid") + '\t' + FormatDouble(c.mcd) + '\t' + FormatDouble(c.valid_mse) + '\t' +
         std::to_string(c.parameters) + '\t' + std::to_string(c.epochs);
}

void ParseLine(const std::string& line, ExperimentReport& r) {
  std::istringstream ss(line);
  std::vector<std::string> f;
  std::string tok;
  while (std::getline(ss, tok, '\t')) f.push_back(tok);
  if (f.empty()) return;
  if (f[0] == "cell" && f.size() == 9) {
    CellResult c;
    c.system = f[1];
    c.seed = std::stoull(f[2]);
    c.direction = ParseDirection(f[3]);
    c.valid = f[4] == "ok";
    c.mcd = std::stod(f[5]);
    c.valid_mse = std::stod(f[6]);
    c.parameters = std::stoll(f[7]);
    c.epochs = std::stoi(f[8]);
    r.cells.push_back(c);
  } else if (f[0] == "source" && f.size() == 4) {
    r.source_bars.push_back({std::stoull(f[1]), ParseDirection(f[2]), std::stod(f[3])});
  } else if (f[0] == "gap" && f.size() == 3) {
    r.rendering_gaps.emplace_back(std::stoull(f[1]), std::stod(f[2]));
  } else if (f[0] == "seeds") {
    for (std::size_t i = 1; i < f.size(); ++i) r.seeds.push_back(std::stoull(f[i]));
  } else if (f[0] == "systems") {
    for (std::size_t i = 1; i < f.size(); ++i) r.systems.push_back(f[i]);
  } else if (f[0] != "kind") {
    throw Error("report table: unrecognized line '" + line + "'");
  }
}

std::string Fixed(double v, int digits = 3) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Two-sided binomial sign test with p = 1/2.
double SignTestP(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  const int k = std::min(wins, losses);
  double tail = 0.0;
  for (int i = 0; i <= k; ++i) tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                                               n * std::log(2.0));
  return std::min(1.0, 2.0 * tail);
}

}  // namespace

void ComparisonConfig::Bind(ConfigSchema& s) {
  corpus.Bind(s, "corpus.");
  widths.BindWidths(s, "model.");
  s.Bind("model.embedding", &embedding, "speaker embedding provider: synthetic | mcc_stats");
  train.Bind(s, "train.");
  convert.Bind(s, "convert.");
  mcd.Bind(s, "eval.");
  s.Bind("eval.budget_matched_li", &budget_matched_li, "also train LI with a trunk widened to the LS budget");
}

std::vector<SystemSpec> ComparisonSystems(bool budget_matched_li) {
  std::vector<SystemSpec> s = {{"bPPG-LI", PpgKind::kBilingualStacked, Variant::kLI, false},
                               {"mPPG-LI", PpgKind::kMixedLingual, Variant::kLI, false},
                               {"bPPG-LS", PpgKind::kBilingualStacked, Variant::kLS, false},
                               {"mPPG-LS", PpgKind::kMixedLingual, Variant::kLS, false}};
  if (budget_matched_li) {
    s.push_back({"bPPG-LI-wide", PpgKind::kBilingualStacked, Variant::kLI, true});
    s.push_back({"mPPG-LI-wide", PpgKind::kMixedLingual, Variant::kLI, true});
  }
  return s;
}

const CellResult* ExperimentReport::Find(const std::string& system, uint64_t seed, Direction d) const {
  for (const auto& c : cells)
    if (c.system == system && c.seed == seed && c.direction == d) return &c;
  return nullptr;
}

std::pair<double, double> ExperimentReport::MeanStd(const std::string& system, Direction d) const {
  std::vector<double> v;
  for (uint64_t s : seeds)
    if (const CellResult* c = Find(system, s, d); c && c->valid) v.push_back(c->mcd);
  if (v.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd};
}

double ExperimentReport::SeedMean(const std::string& system, uint64_t seed) const {
  double sum = 0.0;
  for (Direction d : kDirections) {
    const CellResult* c = Find(system, seed, d);
    if (!c || !c->valid) return std::nan("");
    sum += c->mcd;
  }
  return 0.5 * sum;
}

SignTest CompareSystems(const ExperimentReport& r, const std::string& better, const std::string& worse) {
  SignTest t;
  for (uint64_t s : r.seeds) {
    const double a = r.SeedMean(better, s), b = r.SeedMean(worse, s);
    if (std::isnan(a) || std::isnan(b) || a == b) continue;
    (a < b ? t.wins : t.losses)++;
  }
  t.p_value = SignTestP(t.wins, t.losses);
  return t;
}

fs::path RunDirectory(const fs::path& out, const ComparisonConfig& cfg) {
  ComparisonConfig copy = cfg;
  ConfigSchema schema;
  copy.Bind(schema);
  return out / ("run-" + HexDigest(Fnv1a64(schema.Echo())));
}

ExperimentReport RunComparison(const ComparisonConfig& cfg, const std::vector<uint64_t>& seeds, const fs::path& run,
                               int threads, const ProgressFn& progress) {
  auto say = [&](const std::string& m) {
    if (progress) progress(m);
  };
  fs::create_directories(run);
  {
    ComparisonConfig copy = cfg;
    ConfigSchema schema;
    copy.Bind(schema);
    std::ofstream os(run / "config.cfg", std::ios::trunc);
    os << "# xlvc " << kVersion << " comparison run\n" << schema.Echo();
  }
  ExperimentReport report;
  report.seeds = seeds;
  const std::vector<SystemSpec> systems = ComparisonSystems(cfg.budget_matched_li);
  for (const auto& s : systems) report.systems.push_back(s.name);

  for (uint64_t seed : seeds) {
    const fs::path seed_dir = SeedDir(run, seed);
    const fs::path corpus_dir = seed_dir / "corpus";
    GenerativeConfig gen = cfg.corpus;
    gen.seed = seed;
    if (!fs::exists(corpus_dir / "test.mppg.manifest") || !fs::exists(corpus_dir / "bppg.manifest")) {
      say("seed " + std::to_string(seed) + ": generating corpus");
      GenerateCorpus(gen, corpus_dir, threads);
    }
    report.rendering_gaps.emplace_back(seed, WorldModel::Build(gen).RenderingGap());
    const CorpusLayout layout{corpus_dir};
    const Manifest mixed_test = ReadManifest(layout.test_manifest(PpgKind::kMixedLingual));
    for (Direction d : kDirections) {
      const SystemEvaluation src = SourceReferenceMcd(mixed_test, d, cfg.mcd);
      WriteMcdTable(seed_dir / ("source." + std::string(DirectionName(d)) + ".tsv"), src);
      report.source_bars.push_back({seed, d, src.mean_mcd});
    }

    std::map<PpgKind, std::unique_ptr<TrainingData>> data;
    for (const SystemSpec& sys : systems) {
      const fs::path cell_dir = seed_dir / CellDirName(sys.name);
      const fs::path done = cell_dir / "cell.tsv";
      if (fs::exists(done)) {
        ExperimentReport cached;
        std::ifstream in(done);
        for (std::string line; std::getline(in, line);) ParseLine(line, cached);
        if (cached.cells.size() == 2) {
          say("seed " + std::to_string(seed) + " " + sys.name + ": reusing finished cell");
          for (auto& c : cached.cells) report.cells.push_back(c);
          continue;
        }
      }
      fs::create_directories(cell_dir);
      CellResult base;
      base.system = sys.name;
      base.seed = seed;
      std::vector<CellResult> results;
      try {
        if (!data.count(sys.regime)) {
          const EmbeddingSettings emb{ParseEmbeddingMode(cfg.embedding), gen.spk_dim, gen.seed};
          data[sys.regime] = std::make_unique<TrainingData>(LoadTrainingData(layout.manifest(sys.regime), emb, threads));
        }
        const TrainingData& td = *data[sys.regime];
        ArchitectureConfig arch = cfg.widths;
        arch.variant = Variant::kLS;
        arch.input_dim = td.input_dim();
        arch.output_dim = td.output_dim();
        if (sys.budget_matched) arch = MatchParameterBudget(arch);
        arch.variant = sys.variant;
        TrainHyper hyper = cfg.train;
        hyper.threads = threads;
        Trainer trainer(arch, td, hyper, seed);
        say("seed " + std::to_string(seed) + " " + sys.name + ": training (" +
            std::to_string(CountParameters(arch)) + " parameters)");
        trainer.Train();
        const fs::path ckpt_path = cell_dir / "model.ckpt";
        WriteCheckpoint(ckpt_path, trainer.ToCheckpoint());
        WriteHistoryTable(cell_dir / "history.tsv", trainer.history());
        base.valid_mse = trainer.best_valid();
        base.parameters = CountParameters(arch);
        base.epochs = trainer.epoch();
        const TrainedModel model = LoadTrainedModel(ckpt_path);
        const Manifest test = ReadManifest(layout.test_manifest(sys.regime));
        for (Direction d : kDirections) {
          EvalOptions opt;
          opt.mcd = cfg.mcd;
          opt.convert = cfg.convert;
          opt.output_dir = cell_dir / std::string(DirectionName(d));
          opt.threads = threads;
          const SystemEvaluation e = EvaluateSystem(model, test, d, opt);
          WriteMcdTable(cell_dir / ("mcd." + std::string(DirectionName(d)) + ".tsv"), e);
          CellResult c = base;
          c.direction = d;
          c.valid = true;
          c.mcd = e.mean_mcd;
          results.push_back(c);
        }
        say("seed " + std::to_string(seed) + " " + sys.name + ": MCD A2B " + Fixed(results[0].mcd) + " B2A " +
            Fixed(results[1].mcd) + " dB after " + std::to_string(base.epochs) + " epochs");
      } catch (const TrainingDivergence& e) {
        results.clear();
        for (Direction d : kDirections) {
          CellResult c = base;
          c.direction = d;
          c.error = e.what();
          results.push_back(c);
        }
        std::ofstream(cell_dir / "error.txt") << e.what() << '\n';
        say("seed " + std::to_string(seed) + " " + sys.name + ": invalid cell: " + e.what());
      }
      std::ofstream out(done, std::ios::trunc);
      for (const auto& c : results) {
        out << CellLine(c) << '\n';
        report.cells.push_back(c);
      }
    }
  }
  WriteReportTable(run / "report.tsv", report);
  std::ofstream(run / "summary.txt", std::ios::trunc) << FormatSummary(report);
  return report;
}

void WriteReportTable(const fs::path& path, const ExperimentReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "seeds";
  for (uint64_t s : r.seeds) out << '\t' << s;
  out << "\nsystems";
  for (const auto& s : r.systems) out << '\t' << s;
  out << "\nkind\tsystem\tseed\tdirection\tstatus\tmcd\tvalid_mse\tparameters\tepochs\n";
  for (const auto& c : r.cells) out << CellLine(c) << '\n';
  for (const auto& s : r.source_bars)
    out << "source\t" << s.seed << '\t' << DirectionName(s.direction) << '\t' << FormatDouble(s.mcd) << '\n';
  for (const auto& [seed, gap] : r.rendering_gaps) out << "gap\t" << seed << '\t' << FormatDouble(gap) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

ExperimentReport ReadReportTable(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  ExperimentReport r;
  for (std::string line; std::getline(in, line);) ParseLine(line, r);
  return r;
}

std::string FormatSummary(const ExperimentReport& r) {
  std::ostringstream os;
  os << "xlvc " << kVersion << " cross-lingual comparison\n";
  os << "seeds:";
  for (uint64_t s : r.seeds) os << ' ' << s;
  os << "\n\nMCD in dB, mean +- sample std over seeds\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %10s %12s %20s %20s %10s\n", "system", "params", "valid_mse",
                "A2B", "B2A", "both");
  os << line;
  for (const auto& sys : r.systems) {
    long long params = 0;
    double mse = 0.0;
    int n = 0;
    for (const auto& c : r.cells)
      if (c.system == sys && c.valid && c.direction == Direction::kAtoB) {
        params = c.parameters;
        mse += c.valid_mse;
        ++n;
      }
    const auto a = r.MeanStd(sys, Direction::kAtoB), b = r.MeanStd(sys, Direction::kBtoA);
    std::snprintf(line, sizeof(line), "%-14s %10lld %12s %20s %20s %10s\n", sys.c_str(), params,
                  n ? Fixed(mse / n, 4).c_str() : "nan", (Fixed(a.first) + " +- " + Fixed(a.second)).c_str(),
                  (Fixed(b.first) + " +- " + Fixed(b.second)).c_str(), Fixed(0.5 * (a.first + b.first)).c_str());
    os << line;
  }
  std::map<Direction, std::vector<double>> bars;
  for (const auto& s : r.source_bars) bars[s.direction].push_back(s.mcd);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
  };
  std::snprintf(line, sizeof(line), "%-14s %10s %12s %20s %20s\n", "Source*", "-", "-",
                Fixed(mean(bars[Direction::kAtoB])).c_str(), Fixed(mean(bars[Direction::kBtoA])).c_str());
  os << line;
  os << "* analog only: unconverted source against the target speaker's rendering of the same content\n";
  if (!r.rendering_gaps.empty()) {
    os << "\nrendering gap (spectral norm of R_A - R_B) per seed:";
    for (const auto& [seed, gap] : r.rendering_gaps) os << ' ' << seed << '=' << Fixed(gap);
    os << '\n';
  }
  os << "\nsign tests over seeds on the two-direction mean MCD\n";
  const std::pair<const char*, const char*> pairs[] = {
      {"bPPG-LS", "bPPG-LI"}, {"mPPG-LS", "mPPG-LI"}, {"mPPG-LS", "bPPG-LS"}, {"mPPG-LI", "bPPG-LI"}};
  for (const auto& [a, b] : pairs) {
    const SignTest t = CompareSystems(r, a, b);
    os << "  " << a << " < " << b << ": " << t.wins << " of " << t.wins + t.losses << " seeds, p = " << Fixed(t.p_value)
       << '\n';
  }
  for (const auto& c : r.cells)
    if (!c.valid) os << "invalid cell: " << c.system << " seed " << c.seed << ' ' << DirectionName(c.direction) << '\n';
  return os.str();
}

ExperimentReport RebuildReport(const fs::path& run, const McdConfig& mcd) {
  ExperimentReport stored = ReadReportTable(run / "report.tsv");
  ExperimentReport r = stored;
  for (auto& c : r.cells) {
    if (!c.valid) continue;
    const fs::path corpus = SeedDir(run, c.seed) / "corpus";
    const SystemSpec* spec = nullptr;
    const auto systems = ComparisonSystems(true);
    for (const auto& s : systems)
      if (s.name == c.system) spec = &s;
    if (!spec) throw Error("report: unknown system " + c.system);
    const Manifest test = ReadManifest(CorpusLayout{corpus}.test_manifest(spec->regime));
    const fs::path dir = SeedDir(run, c.seed) / CellDirName(c.system) / std::string(DirectionName(c.direction));
    c.mcd = EvaluateWithConverter(test, c.direction, [&](const TestPair& p) {
              return ReadFeatureMatrix(dir / ConvertedFileName(p), KindCode::kAcoustic);
            }, mcd).mean_mcd;
  }
  for (auto& s : r.source_bars) {
    const Manifest test = ReadManifest(CorpusLayout{SeedDir(run, s.seed) / "corpus"}.test_manifest(PpgKind::kMixedLingual));
    s.mcd = SourceReferenceMcd(test, s.direction, mcd).mean_mcd;
  }
  return r;
}

}  // namespace xlvc
