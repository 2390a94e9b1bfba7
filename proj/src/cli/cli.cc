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

#include "xlvc/cli/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <map>

#include "xlvc/features/feature_file.h"
#include "xlvc/generation/convert.h"
#include "xlvc/modnet/modular_network.h"
#include "xlvc/parallel.h"
#include "xlvc/synthcorpus/corpus.h"

namespace xlvc {

namespace fs = std::filesystem;

namespace {

constexpr double kGradCheckTolerance = 1e-4;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

void WriteRunConfig(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream os(dir / "run.cfg", std::ios::trunc);
  os << EffectiveConfigText(cfg);
  if (!os) throw Error("cannot write " + (dir / "run.cfg").string());
}

// Name lookups on command-line values report bad names as usage errors.
template <typename F>
auto FromFlag(F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

PpgKind TrainingRegime(const std::string& name) {
  const PpgKind k = FromFlag([&] { return ParsePpgKind(name); });
  if (k != PpgKind::kBilingualStacked && k != PpgKind::kMixedLingual)
    throw UsageError("--regime must be bppg or mppg");
  return k;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int threads = 0;

  RunConfig Load() const { return LoadRunConfig(config, overrides); }
  int Threads() const { return threads > 0 ? threads : DefaultThreadCount(); }
};

void AddConfigOptions(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value configuration file");
  sub->add_option("--set", c.overrides, "override one key (key=value), repeatable");
}

int CmdGenCorpus(const Common& c, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = c.Load();
  const CorpusSummary s = GenerateCorpus(cfg.experiment.corpus, out_dir, c.Threads());
  WriteRunConfig(out_dir, cfg);
  const Manifest m = ReadManifest(s.layout.manifest(PpgKind::kMixedLingual));
  std::map<std::string, int> per_speaker;
  int per_lang[kNumLanguages] = {0, 0};
  for (const auto& r : m.records) {
    ++per_speaker[r.speaker_id];
    ++per_lang[static_cast<int>(r.language)];
  }
  out << "corpus written to " << out_dir << " (rendering gap " << Fixed(s.rendering_gap, 4) << ")\n";
  out << "records: " << s.train_records << " train, " << s.validation_records << " validation, " << s.test_records
      << " test\n";
  for (LanguageId l : {LanguageId::kA, LanguageId::kB})
    out << "language " << LanguageName(l) << ": " << per_lang[static_cast<int>(l)] << " utterances\n";
  for (const auto& [spk, n] : per_speaker) out << "  " << spk << ": " << n << "\n";
  out << s.layout.manifest(PpgKind::kMixedLingual).string() << "\n";
  return 0;
}

int CmdExtractPpg(const Common& c, const std::string& corpus, const std::string& regime, std::ostream& out) {
  const PpgKind kind = FromFlag([&] { return ParsePpgKind(regime); });
  ExtractCorpusPpg(corpus, kind, c.Threads());
  const CorpusLayout layout{corpus};
  int bad = 0;
  for (const auto& path : {layout.manifest(kind), layout.test_manifest(kind)}) {
    const Manifest m = ReadManifest(path);
    for (const auto& r : m.records) {
      Posteriorgram p;
      p.kind = kind;
      p.frames = ReadFeatureMatrix(m.Resolve(r.ppg_path), PpgKindCode(kind));
      if (kind == PpgKind::kBilingualStacked) p.block_a_dim = LoadCorpusConfig(corpus).dim_a();
      bad += static_cast<int>(!ValidatePosteriorgram(p, 1e-6).empty());
    }
    out << path.string() << "\n";
  }
  if (bad) throw Error(std::to_string(bad) + " posteriorgrams failed validation");
  return 0;
}

int CmdTrain(const Common& c, std::string corpus, const std::string& regime, const std::string& variant,
             const std::string& out_dir, const std::string& resume, std::ostream& out) {
  const RunConfig cfg = c.Load();
  if (corpus.empty()) corpus = cfg.corpus;
  if (corpus.empty()) throw UsageError("train needs --corpus or run.corpus");
  const PpgKind kind = TrainingRegime(regime);
  const Variant var = FromFlag([&] { return ParseVariant(variant); });
  const GenerativeConfig gen = LoadCorpusConfig(corpus);
  const EmbeddingSettings emb{ParseEmbeddingMode(cfg.experiment.embedding), gen.spk_dim, gen.seed};
  const TrainingData data = LoadTrainingData(CorpusLayout{corpus}.manifest(kind), emb, c.Threads());

  ArchitectureConfig arch = cfg.experiment.widths;
  arch.variant = var;
  arch.input_dim = data.input_dim();
  arch.output_dim = data.output_dim();
  TrainHyper hyper = cfg.experiment.train;
  hyper.threads = c.Threads();

  WriteRunConfig(out_dir, cfg);
  auto trainer = resume.empty() ? Trainer(arch, data, hyper, cfg.seed)
                                : Trainer::FromCheckpoint(ReadCheckpoint(resume), data);
  if (resume.empty()) trainer.set_config_hash(RunConfigHash(cfg));
  else trainer.set_max_epochs(cfg.experiment.train.max_epochs);
  out << "training " << PpgKindName(kind) << "-" << VariantName(var) << ": " << CountParameters(arch)
      << " parameters, " << data.train.size() << " training utterances\n";
  const fs::path ckpt = fs::path(out_dir) / "model.ckpt";
  try {
    trainer.Train([&](const EpochRecord& r) {
      out << "epoch " << r.epoch << "  train " << Sci(r.train_mse[0]) << " " << Sci(r.train_mse[1]) << "  valid "
          << Sci(r.valid_mse[0]) << " " << Sci(r.valid_mse[1]) << "\n";
    });
  } catch (const TrainingDivergence&) {
    WriteHistoryTable(fs::path(out_dir) / "history.tsv", trainer.history());
    throw;
  }
  WriteCheckpoint(ckpt, trainer.ToCheckpoint());
  WriteHistoryTable(fs::path(out_dir) / "history.tsv", trainer.history());
  const EpochRecord last = trainer.history().empty() ? EpochRecord{} : trainer.history().back();
  out << "final validation MSE: A " << Sci(last.valid_mse[0]) << "  B " << Sci(last.valid_mse[1]) << "\n";
  out << "best epoch " << trainer.best_epoch() << " mean validation MSE " << Sci(trainer.best_valid()) << "\n";
  out << ckpt.string() << "\n";
  return 0;
}

// Test manifest of the corpus the model was trained on, then its training
// manifest.
std::vector<fs::path> DefaultSourceManifests(const TrainedModel& model) {
  const fs::path dir = model.manifest_path.parent_path();
  return {dir / ("test." + std::string(PpgKindName(model.regime)) + ".manifest"), model.manifest_path};
}

int CmdConvert(const Common& c, const std::string& checkpoint, const std::string& utterance,
               const std::string& target, const std::string& output, const std::string& manifest_path,
               std::ostream& out) {
  const RunConfig cfg = c.Load();
  const TrainedModel model = LoadTrainedModel(checkpoint);
  std::vector<fs::path> candidates;
  if (!manifest_path.empty()) candidates.push_back(manifest_path);
  else candidates = DefaultSourceManifests(model);
  for (const auto& path : candidates) {
    if (!fs::exists(path)) continue;
    const Manifest m = ReadManifest(path);
    const UtteranceRecord* r = m.Find(utterance);
    if (!r) continue;
    const ConversionContext context(model);
    ConversionLogRecord log;
    ConvertUtterance(context, m, *r, target, output, cfg.experiment.convert, &log);
    const fs::path log_path = fs::path(output).parent_path() / "conversion.log";
    std::ofstream(log_path, std::ios::app) << FormatConversionLog(log) << "\n";
    out << output << "\n";
    return 0;
  }
  throw UsageError("utterance " + utterance + " not found in the source manifest");
}

int CmdEvaluate(const Common& c, const std::string& checkpoint, const std::string& manifest,
                const std::string& direction, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = c.Load();
  const TrainedModel model = LoadTrainedModel(checkpoint);
  const Manifest test = ReadManifest(manifest);
  const Direction d = FromFlag([&] { return ParseDirection(direction); });
  EvalOptions opt;
  opt.mcd = cfg.experiment.mcd;
  opt.convert = cfg.experiment.convert;
  opt.threads = c.Threads();
  if (!out_dir.empty()) {
    opt.output_dir = fs::path(out_dir) / std::string(DirectionName(d));
    WriteRunConfig(out_dir, cfg);
  }
  const SystemEvaluation e = EvaluateSystem(model, test, d, opt);
  if (!out_dir.empty()) WriteMcdTable(fs::path(out_dir) / ("mcd." + std::string(DirectionName(d)) + ".tsv"), e);
  for (const auto& r : e.rows)
    out << r.source_utterance << " -> " << r.target_speaker << "  " << Fixed(r.mcd, 4) << " dB\n";
  out << "mean MCD " << DirectionName(d) << ": " << Fixed(e.mean_mcd, 4) << " dB over " << e.rows.size()
      << " pairs\n";
  return 0;
}

int CmdGradcheck(const std::string& preset, int frames, uint64_t seed, double epsilon, std::ostream& out) {
  GradCheckOptions opt;
  opt.epsilon = epsilon;
  opt.seed = seed;
  const ArchitectureConfig arch = FromFlag([&] { return GradCheckPreset(preset); });
  const GradCheckResult r = CheckModularGradients(arch, frames, LanguageId::kA, seed, opt);
  out << "preset " << preset << ": " << CountParameters(arch) << " parameters, T = " << frames << ", epsilon "
      << Sci(epsilon) << "\n";
  out << "checked " << r.checked << " scalars; worst " << r.worst_tensor << "[" << r.worst_index << "] analytic "
      << Sci(r.worst_analytic) << " numeric " << Sci(r.worst_numeric) << "\n";
  out << "max relative error " << Sci(r.max_relative_error) << "\n";
  return r.max_relative_error <= kGradCheckTolerance ? 0 : 1;
}

std::vector<uint64_t> SeedList(int count, const std::vector<uint64_t>& explicit_seeds) {
  if (!explicit_seeds.empty()) return explicit_seeds;
  if (count < 1) throw UsageError("--seeds must be positive");
  std::vector<uint64_t> s;
  for (int i = 1; i <= count; ++i) s.push_back(static_cast<uint64_t>(i));
  return s;
}

int CmdExperiment(const Common& c, int seeds, const std::vector<uint64_t>& seed_list, const std::string& out_dir,
                  std::ostream& out) {
  const RunConfig cfg = c.Load();
  const std::vector<uint64_t> list = SeedList(seeds, seed_list);
  const fs::path run = RunDirectory(out_dir.empty() ? cfg.out_root : out_dir, cfg.experiment);
  WriteRunConfig(run, cfg);
  out << "run directory " << run.string() << "\n";
  const ExperimentReport r = RunComparison(cfg.experiment, list, run, c.Threads(),
                                           [&](const std::string& m) { out << m << std::endl; });
  out << FormatSummary(r);
  return 0;
}

int CmdReport(const Common& c, const std::string& run, std::ostream& out) {
  const RunConfig cfg = c.Load();
  const ExperimentReport stored = ReadReportTable(fs::path(run) / "report.tsv");
  const ExperimentReport rebuilt = RebuildReport(run, cfg.experiment.mcd);
  int mismatches = 0;
  for (std::size_t i = 0; i < stored.cells.size(); ++i)
    if (stored.cells[i].valid && stored.cells[i].mcd != rebuilt.cells[i].mcd) ++mismatches;
  for (std::size_t i = 0; i < stored.source_bars.size(); ++i)
    if (stored.source_bars[i].mcd != rebuilt.source_bars[i].mcd) ++mismatches;
  out << FormatSummary(rebuilt);
  if (mismatches) {
    out << mismatches << " cells differ from report.tsv\n";
    return 1;
  }
  out << "all cells reproduced from persisted outputs\n";
  return 0;
}

}  // namespace

void RunConfig::Bind(ConfigSchema& s) {
  experiment.Bind(s);
  s.Bind("run.seed", &seed, "training seed for the train command");
  s.Bind("run.corpus", &corpus, "corpus directory used by train when --corpus is absent");
  s.Bind("run.out_root", &out_root, "parent directory of experiment run directories");
}

RunConfig LoadRunConfig(const fs::path& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  ConfigSchema schema;
  cfg.Bind(schema);
  if (!path.empty()) schema.Apply(ReadKeyValueFile(path), path.string());
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t"), e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    const std::string key = trim(o.substr(0, eq));
    if (!schema.Has(key)) throw ConfigError("unknown configuration key '" + key + "' in --set");
    schema.Set(key, trim(o.substr(eq + 1)));
  }
  const ComparisonConfig& e = cfg.experiment;
  e.corpus.Validate();
  e.train.Validate();
  e.mcd.Range(e.corpus.mcc_dim);
  if (e.widths.projection_width < 1 || e.widths.blstm_width < 1 || e.widths.head_width < 1)
    throw ConfigError("model widths must be positive");
  if (e.embedding != "synthetic" && e.embedding != "mcc_stats")
    throw ConfigError("model.embedding must be synthetic or mcc_stats");
  return cfg;
}

std::string EffectiveConfigText(const RunConfig& cfg) {
  RunConfig copy = cfg;
  ConfigSchema schema;
  copy.Bind(schema);
  return "# xlvc " + std::string(kVersion) + "\n" + schema.Echo();
}

std::string RunConfigHash(const RunConfig& cfg) { return HexDigest(Fnv1a64(EffectiveConfigText(cfg))); }

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"xlvc: cross-lingual voice conversion with modular networks over synthetic corpora"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "worker threads (default: XLVC_THREADS or all cores)");

  std::string out_dir, corpus, regime, variant = "ls", resume, checkpoint, utterance, target, manifest, direction;
  std::string preset = "ls", run;
  int frames = 5, seeds = 5;
  uint64_t seed = 1;
  double epsilon = 1e-5;
  std::vector<uint64_t> seed_list;

  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic bilingual corpus");
  AddConfigOptions(gen, common);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* ext = app.add_subcommand("extract-ppg", "write posteriorgrams of one regime for a corpus");
  ext->add_option("--corpus", corpus, "corpus directory")->required();
  ext->add_option("--regime", regime, "monoA | monoB | bppg | mppg")->required();

  auto* train = app.add_subcommand("train", "train one system");
  AddConfigOptions(train, common);
  train->add_option("--corpus", corpus, "corpus directory (default: run.corpus)");
  train->add_option("--regime", regime, "bppg | mppg")->required();
  train->add_option("--variant", variant, "li | ls")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--resume", resume, "continue from a checkpoint");

  auto* conv = app.add_subcommand("convert", "convert one utterance to a target speaker");
  AddConfigOptions(conv, common);
  conv->add_option("--checkpoint", checkpoint, "trained model")->required();
  conv->add_option("--utterance", utterance, "source utterance id")->required();
  conv->add_option("--target-speaker", target, "target speaker id")->required();
  conv->add_option("--out", out_dir, "output XVCF file")->required();
  conv->add_option("--manifest", manifest, "manifest holding the source utterance");

  auto* eval = app.add_subcommand("evaluate", "MCD of one system on a parallel test manifest");
  AddConfigOptions(eval, common);
  eval->add_option("--checkpoint", checkpoint, "trained model")->required();
  eval->add_option("--manifest", manifest, "test manifest")->required();
  eval->add_option("--direction", direction, "A2B | B2A")->required();
  eval->add_option("--out", out_dir, "directory for converted files and the MCD table");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient check");
  grad->add_option("--arch-preset", preset, "ls | li");
  grad->add_option("--frames", frames, "sequence length");
  grad->add_option("--seed", seed, "parameter and data seed");
  grad->add_option("--epsilon", epsilon, "central difference step");

  auto* exp = app.add_subcommand("experiment", "four-system comparison over seeds");
  AddConfigOptions(exp, common);
  exp->add_option("--seeds", seeds, "number of seeds (1..N)");
  exp->add_option("--seed-list", seed_list, "explicit seeds")->excludes(exp->get_option("--seeds"));
  exp->add_option("--out", out_dir, "output root (default: run.out_root); the run directory is named by the config hash");

  auto* rep = app.add_subcommand("report", "rebuild a comparison report from persisted outputs");
  AddConfigOptions(rep, common);
  rep->add_option("--run", run, "run directory")->required();

  auto* doc = app.add_subcommand("config", "print every configuration key with its default");
  AddConfigOptions(doc, common);

  std::vector<std::string> argv_store = {"xlvc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return CmdGenCorpus(common, out_dir, out);
    if (*ext) return CmdExtractPpg(common, corpus, regime, out);
    if (*train) return CmdTrain(common, corpus, regime, variant, out_dir, resume, out);
    if (*conv) return CmdConvert(common, checkpoint, utterance, target, out_dir, manifest, out);
    if (*eval) return CmdEvaluate(common, checkpoint, manifest, direction, out_dir, out);
    if (*grad) return CmdGradcheck(preset, frames, seed, epsilon, out);
    if (*exp) return CmdExperiment(common, seeds, seed_list, out_dir, out);
    if (*rep) return CmdReport(common, run, out);
    if (*doc) {
      RunConfig cfg = common.Load();
      ConfigSchema schema;
      cfg.Bind(schema);
      out << "# xlvc " << kVersion << "\n" << schema.Documentation();
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "xlvc: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "xlvc: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "xlvc: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace xlvc
