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

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "test_util.h"
#include "xlvc/cli/cli.h"
#include "xlvc/features/feature_file.h"
#include "xlvc/common.h"

namespace xlvc {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) { return testing::ReadBytes(p); }

// Tiny world and model written as a config file.
fs::path TinyConfig(const fs::path& dir) {
  const fs::path path = dir / "tiny.cfg";
  std::ofstream os(path);
  os << "# tiny run\n"
        "corpus.phones_a = 4\ncorpus.phones_b = 5\ncorpus.latent_dim = 4\ncorpus.mcc_dim = 4\n"
        "corpus.spk_dim = 4\ncorpus.speakers_per_language = 2\ncorpus.utterances_per_speaker = 4\n"
        "corpus.validation_per_speaker = 1\ncorpus.test_contents_per_language = 2\n"
        "corpus.min_frames = 40\ncorpus.max_frames = 60\n"
        "corpus.min_phone_frames = 3\ncorpus.max_phone_frames = 6\n"
        "model.projection_width = 8\nmodel.blstm_width = 4\nmodel.head_width = 4\n"
        "train.batch_sequences = 4\ntrain.max_epochs = 2\n";
  return path;
}

TEST_CASE("usage errors exit 2") {
  CHECK(Run({}).code == 2);
  CHECK(Run({"frobnicate"}).code == 2);
  const Result r = Run({"gen-corpus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(Run({"train", "--regime", "mppg"}).code == 2);  // no corpus anywhere
  CHECK(Run({"train", "--corpus", "x", "--regime", "monoa", "--variant", "ls", "--out", "y"}).code == 2);
  CHECK(Run({"experiment", "--seeds", "2", "--seed-list", "1", "2"}).code == 2);
}

TEST_CASE("configuration errors exit 2") {
  const fs::path dir = testing::ScratchDir("cli_config");
  const Result unknown = Run({"gen-corpus", "--out", (dir / "c").string(), "--set", "corpus.colour=3"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("corpus.colour") != std::string::npos);
  CHECK(Run({"gen-corpus", "--out", (dir / "c").string(), "--set", "corpus.phones_a=-1"}).code == 2);
  CHECK(Run({"gen-corpus", "--out", (dir / "c").string(), "--set", "corpus.phones_a"}).code == 2);
  CHECK(Run({"gen-corpus", "--out", (dir / "c").string(), "--config", (dir / "missing.cfg").string()}).code == 2);
  std::ofstream(dir / "bad.cfg") << "corpus.phones_a = 4\nthis is not a pair\n";
  const Result bad = Run({"gen-corpus", "--out", (dir / "c").string(), "--config", (dir / "bad.cfg").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find(":2") != std::string::npos);
}

TEST_CASE("help and config documentation exit 0") {
  CHECK(Run({"--help"}).code == 0);
  const Result doc = Run({"config"});
  CHECK(doc.code == 0);
  CHECK(doc.out.find("train.lr = 0.002") != std::string::npos);
  CHECK(doc.out.find(std::string("# xlvc ") + kVersion) == 0);
}

TEST_CASE("effective configuration") {
  const fs::path dir = testing::ScratchDir("cli_effective");
  const RunConfig a = LoadRunConfig(TinyConfig(dir));
  const RunConfig b = LoadRunConfig(TinyConfig(dir), {"train.lr=0.01"});
  CHECK(b.experiment.train.lr == 0.01);
  CHECK(RunConfigHash(a) != RunConfigHash(b));
  CHECK(RunConfigHash(a) == RunConfigHash(LoadRunConfig(TinyConfig(dir))));
  CHECK(EffectiveConfigText(a).find(std::string("# xlvc ") + kVersion) == 0);
  // Echo then reload is a fixed point.
  std::ofstream(dir / "echo.cfg") << EffectiveConfigText(b);
  CHECK(EffectiveConfigText(LoadRunConfig(dir / "echo.cfg")) == EffectiveConfigText(b));
}

TEST_CASE("gradcheck subcommand") {
  const Result r = Run({"gradcheck", "--arch-preset", "ls", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(Run({"gradcheck", "--arch-preset", "huge"}).code == 2);
}

TEST_CASE("corpus, training, conversion and evaluation end to end") {
  const fs::path dir = testing::ScratchDir("cli_pipeline");
  const std::string cfg = TinyConfig(dir).string();
  const std::string c1 = (dir / "c1").string(), c2 = (dir / "c2").string();

  const Result gen = Run({"gen-corpus", "--config", cfg, "--out", c1});
  REQUIRE(gen.code == 0);
  CHECK(gen.out.find("records: 12 train, 4 validation, 16 test") != std::string::npos);
  REQUIRE(Run({"--threads", "2", "gen-corpus", "--config", cfg, "--out", c2}).code == 0);
  for (const char* m : {"mppg.manifest", "bppg.manifest", "test.mppg.manifest"}) CHECK(Slurp(fs::path(c1) / m) == Slurp(fs::path(c2) / m));
  CHECK(Slurp(fs::path(c1) / "acoustic" / "A-s0-u000.xvcf") == Slurp(fs::path(c2) / "acoustic" / "A-s0-u000.xvcf"));
  const std::string run_cfg = Slurp(fs::path(c1) / "run.cfg");
  CHECK(run_cfg.find(std::string("# xlvc ") + kVersion) == 0);

  CHECK(Run({"extract-ppg", "--corpus", c1, "--regime", "monoA"}).code == 0);

  const std::string model_dir = (dir / "model").string();
  const Result train =
      Run({"train", "--config", cfg, "--corpus", c1, "--regime", "mppg", "--variant", "ls", "--out", model_dir});
  REQUIRE(train.code == 0);
  CHECK(train.out.find("best epoch") != std::string::npos);
  const std::string ckpt = (fs::path(model_dir) / "model.ckpt").string();
  CHECK(fs::exists(fs::path(model_dir) / "history.tsv"));

  // Resuming to a larger epoch budget continues the history.
  const Result resumed = Run({"train", "--config", cfg, "--set", "train.max_epochs=3", "--corpus", c1, "--regime",
                              "mppg", "--variant", "ls", "--out", model_dir, "--resume", ckpt});
  REQUIRE(resumed.code == 0);
  CHECK(resumed.out.find("epoch 3") != std::string::npos);

  const std::string conv = (dir / "conv" / "x.xvcf").string();
  fs::create_directories(dir / "conv");
  const Result convert =
      Run({"convert", "--checkpoint", ckpt, "--utterance", "test-A-t000-A-s0", "--target-speaker", "B-s1", "--out", conv});
  REQUIRE(convert.code == 0);
  CHECK(ReadFeatureMatrix(conv, KindCode::kAcoustic).cols() == 19);
  CHECK(Slurp(dir / "conv" / "conversion.log").find("source=test-A-t000-A-s0 target=B-s1") == 0);

  // A bPPG manifest with an mPPG model is a runtime error.
  const Result mismatch = Run({"convert", "--checkpoint", ckpt, "--utterance", "test-A-t000-A-s0", "--target-speaker",
                               "B-s1", "--out", conv, "--manifest", (fs::path(c1) / "test.bppg.manifest").string()});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("regime mismatch") != std::string::npos);
  CHECK(Run({"convert", "--checkpoint", ckpt, "--utterance", "nope", "--target-speaker", "B-s1", "--out", conv}).code ==
        2);

  const std::string eval_dir = (dir / "eval").string();
  const Result eval = Run({"evaluate", "--checkpoint", ckpt, "--manifest",
                           (fs::path(c1) / "test.mppg.manifest").string(), "--direction", "B2A", "--out", eval_dir});
  REQUIRE(eval.code == 0);
  CHECK(eval.out.find("mean MCD B2A") != std::string::npos);
  CHECK(fs::exists(fs::path(eval_dir) / "mcd.B2A.tsv"));
}

TEST_CASE("divergent training exits 1 and keeps its history") {
  const fs::path dir = testing::ScratchDir("cli_diverge");
  const std::string cfg = TinyConfig(dir).string();
  REQUIRE(Run({"gen-corpus", "--config", cfg, "--out", (dir / "c").string()}).code == 0);
  const Result r = Run({"train", "--config", cfg, "--set", "train.lr=1e200", "--set", "train.clip_norm=0", "--corpus",
                        (dir / "c").string(), "--regime", "bppg", "--variant", "li", "--out", (dir / "m").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("non-finite loss at epoch 1") != std::string::npos);
  CHECK(fs::exists(dir / "m" / "history.tsv"));
}

TEST_CASE("experiment and report") {
  const fs::path dir = testing::ScratchDir("cli_experiment");
  const std::string cfg = TinyConfig(dir).string();
  const Result r = Run({"experiment", "--config", cfg, "--seed-list", "5", "6", "--out", (dir / "runs").string()});
  REQUIRE(r.code == 0);
  fs::path run;
  for (const auto& e : fs::directory_iterator(dir / "runs")) run = e.path();
  REQUIRE(fs::exists(run / "report.tsv"));
  int cells = 0;
  std::istringstream table(Slurp(run / "report.tsv"));
  for (std::string line; std::getline(table, line);) cells += line.rfind("cell\t", 0) == 0;
  CHECK(cells == 4 * 2 * 2);
  CHECK(r.out.find("bPPG-LS < bPPG-LI") != std::string::npos);

  const Result report = Run({"report", "--run", run.string()});
  CHECK(report.code == 0);
  CHECK(report.out.find("all cells reproduced") != std::string::npos);
}

}  // namespace
}  // namespace xlvc
