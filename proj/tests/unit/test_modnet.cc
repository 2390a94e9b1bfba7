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

#include <cstring>

#include "test_util.h"
#include "xlvc/modnet/modular_network.h"
#include "xlvc/modnet/training.h"
#include "xlvc/rng.h"
#include "xlvc/synthcorpus/corpus.h"

namespace xlvc {
namespace {

namespace fs = std::filesystem;

ArchitectureConfig Small(Variant v) {
  ArchitectureConfig a;
  a.variant = v;
  a.input_dim = 7;
  a.output_dim = 5;
  a.projection_width = 6;
  a.blstm_width = 4;
  a.head_width = 5;
  return a;
}

void CopyHead(ParamStore& p, const std::string& from, const std::string& to) {
  for (int i = 0; i < p.size(); ++i) {
    const std::string& n = p.name(i);
    if (n.rfind(from, 0) == 0) p.value(to + n.substr(from.size())) = p.value(i);
  }
}

const TrainingData& TinyData() {
  static const TrainingData data = [] {
    const fs::path dir = testing::ScratchDir("modnet_corpus");
    GenerateCorpus(testing::TinyCorpus(), dir, 1);
    return LoadTrainingData(CorpusLayout{dir}.manifest(PpgKind::kMixedLingual), EmbeddingSettings{EmbeddingMode::kSynthetic, 4, 1});
  }();
  return data;
}

ArchitectureConfig TinyArch(Variant v) {
  ArchitectureConfig a = Small(v);
  a.input_dim = TinyData().input_dim();
  a.output_dim = TinyData().output_dim();
  return a;
}

TrainHyper TinyHyper() {
  TrainHyper h;
  h.batch_sequences = 4;
  h.max_epochs = 3;
  return h;
}

TEST_CASE("head routing of the forward pass") {
  ModularNetwork net(Small(Variant::kLS));
  net.Initialize(3, false);
  auto rng = MakeStream(1);
  const Matrix x = RandomNormal(rng, 6, 7);

  SUBCASE("identical heads give identical outputs") {
    CopyHead(net.params(), "head.A.", "head.B.");
    CHECK(net.Forward(x, LanguageId::kA) == net.Forward(x, LanguageId::kB));
  }
  SUBCASE("perturbed head B gives different outputs") {
    CopyHead(net.params(), "head.A.", "head.B.");
    auto prng = MakeStream(2);
    for (int i = 0; i < net.params().size(); ++i)
      if (net.params().name(i).rfind("head.B.", 0) == 0) {
        Matrix& w = net.params().value(i);
        w += RandomNormal(prng, w.rows(), w.cols(), 0.1);
      }
    const Matrix a = net.Forward(x, LanguageId::kA), b = net.Forward(x, LanguageId::kB);
    for (int t = 0; t < 6; ++t) CHECK((a.row(t) - b.row(t)).norm() > 0.0);
  }
  SUBCASE("all-zero parameters output the final bias") {
    for (int i = 0; i < net.params().size(); ++i) net.params().value(i).setZero();
    net.params().value("head.B.out.b") << 1, 2, 3, 4, 5;
    const Matrix y = net.Forward(x, LanguageId::kB);
    for (int t = 0; t < 6; ++t) CHECK(y.row(t) == net.params().value("head.B.out.b"));
  }
  SUBCASE("head names") {
    CHECK(net.num_heads() == 2);
    CHECK(net.HeadName(net.HeadFor(LanguageId::kA)) == "head.A");
    CHECK(net.HeadName(net.HeadFor(LanguageId::kB)) == "head.B");
    ModularNetwork li(Small(Variant::kLI));
    CHECK(li.num_heads() == 1);
    CHECK(li.HeadFor(LanguageId::kA) == li.HeadFor(LanguageId::kB));
    CHECK(li.HeadName(0) == "head.shared");
  }
  SUBCASE("width mismatch") { CHECK_THROWS(net.Forward(RandomNormal(rng, 6, 8), LanguageId::kA)); }
}

TEST_CASE("zero output layer makes an untrained model predict zeros") {
  ModularNetwork net(Small(Variant::kLS));
  net.Initialize(5);
  auto rng = MakeStream(1);
  CHECK(net.Forward(RandomNormal(rng, 4, 7), LanguageId::kA).isZero(0.0));
}

TEST_CASE("parameter counts and budget matching") {
  ArchitectureConfig ls = Small(Variant::kLS);
  ModularNetwork net(ls);
  CHECK(net.params().ParameterCount() == CountParameters(ls));
  ArchitectureConfig li = ls;
  li.variant = Variant::kLI;
  CHECK(ModularNetwork(li).params().ParameterCount() == CountParameters(li));

  ArchitectureConfig def;
  def.input_dim = 61;
  def.output_dim = 43;
  const ArchitectureConfig wide = MatchParameterBudget(def);
  CHECK(wide.variant == Variant::kLI);
  const double ratio = static_cast<double>(CountParameters(wide)) / CountParameters(def);
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("modular gradient check presets") {
  for (const char* preset : {"ls", "li"}) {
    const ArchitectureConfig arch = GradCheckPreset(preset);
    for (LanguageId lang : {LanguageId::kA, LanguageId::kB}) {
      const GradCheckResult r = CheckModularGradients(arch, 5, lang, 1);
      INFO(preset << " worst " << r.worst_tensor);
      CHECK(r.checked == CountParameters(arch));
      CHECK(r.max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("standardizer") {
  Matrix a(3, 2), b(1, 2);
  a << 1, 5, 2, 5, 3, 5;
  b << 4, 5;
  const Standardizer s = Standardizer::Fit({&a, &b});
  CHECK(s.mean(0) == doctest::Approx(2.5));
  CHECK(s.stddev(0) == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.stddev(1) == doctest::Approx(1e-4));  // floored variance 1e-8
  const Matrix z = s.Apply(a);
  CHECK((s.Invert(z) - a).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("language batch scheduler") {
  SUBCASE("240 equal-size utterances in batches of 25 alternate") {
    std::vector<LanguageId> langs;
    for (int i = 0; i < 240; ++i) langs.push_back(i < 120 ? LanguageId::kA : LanguageId::kB);
    const auto batches = ScheduleBatches(langs, 25, 1, 1);
    REQUIRE(batches.size() == 10);
    for (std::size_t i = 0; i < batches.size(); ++i)
      CHECK(batches[i].language == (i % 2 == 0 ? LanguageId::kA : LanguageId::kB));
    std::vector<int> seen;
    for (const auto& b : batches) {
      CHECK(b.items.size() <= 25);
      for (int i : b.items) CHECK(langs[i] == b.language);
      seen.insert(seen.end(), b.items.begin(), b.items.end());
    }
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < 240; ++i) CHECK(seen[i] == i);
  }
  SUBCASE("a language with no utterances gets no batches") {
    const std::vector<LanguageId> langs(30, LanguageId::kB);
    const auto batches = ScheduleBatches(langs, 25, 1, 1);
    REQUIRE(batches.size() == 2);
    for (const auto& b : batches) CHECK(b.language == LanguageId::kB);
    CHECK(ScheduleBatches({}, 25, 1, 1).empty());
  }
  SUBCASE("proportional interleaving") {
    std::vector<LanguageId> langs(100, LanguageId::kA);
    langs.resize(150, LanguageId::kB);
    const auto batches = ScheduleBatches(langs, 25, 3, 2);
    std::string order;
    for (const auto& b : batches) order += b.language == LanguageId::kA ? 'A' : 'B';
    CHECK(order == "ABAABA");
  }
  SUBCASE("deterministic per seed and epoch") {
    std::vector<LanguageId> langs;
    for (int i = 0; i < 60; ++i) langs.push_back(i % 3 ? LanguageId::kA : LanguageId::kB);
    auto items = [&](uint64_t seed, int epoch) {
      std::vector<std::vector<int>> v;
      for (const auto& b : ScheduleBatches(langs, 7, seed, epoch)) v.push_back(b.items);
      return v;
    };
    CHECK(items(5, 1) == items(5, 1));
    CHECK(items(5, 1) != items(5, 2));
    CHECK(items(5, 1) != items(6, 1));
  }
}

TEST_CASE("gradient routing after one batch of each language") {
  const TrainingData& data = TinyData();
  for (LanguageId lang : {LanguageId::kA, LanguageId::kB}) {
    Trainer trainer(TinyArch(Variant::kLS), data, TinyHyper(), 1);
    // Random output layers so every head parameter would get signal.
    trainer.mutable_model().Initialize(1, false);
    Batch batch{lang, {}};
    for (int i = 0; i < static_cast<int>(data.train.size()); ++i)
      if (data.train[i].language == lang && batch.items.size() < 4) batch.items.push_back(i);
    trainer.AccumulateBatch(batch);
    const ParamStore& p = trainer.model().params();
    const std::string active = lang == LanguageId::kA ? "head.A." : "head.B.";
    const std::string idle = lang == LanguageId::kA ? "head.B." : "head.A.";
    for (int i = 0; i < p.size(); ++i) {
      const std::string& n = p.name(i);
      INFO(n);
      if (n.rfind(idle, 0) == 0) {
        for (Eigen::Index k = 0; k < p.grad(i).size(); ++k) CHECK(std::signbit(p.grad(i).data()[k]) == false);
        CHECK(p.grad(i).isZero(0.0));
      } else {
        CHECK(p.grad(i).norm() > 0.0);
      }
    }
  }
}

TEST_CASE("head symmetry") {
  const TrainingData& data = TinyData();
  Trainer trainer(TinyArch(Variant::kLS), data, TinyHyper(), 2);
  trainer.mutable_model().Initialize(2, false);
  const ModularNetwork& original = trainer.model();
  ModularNetwork swapped = original;
  for (int i = 0; i < original.params().size(); ++i) {
    const std::string& n = original.params().name(i);
    if (n.rfind("head.A.", 0) == 0) swapped.params().value("head.B." + n.substr(7)) = original.params().value(i);
    if (n.rfind("head.B.", 0) == 0) swapped.params().value("head.A." + n.substr(7)) = original.params().value(i);
  }
  // Language-l utterances routed through the other head of the swapped model.
  for (LanguageId lang : {LanguageId::kA, LanguageId::kB}) {
    const double before = trainer.Evaluate(original, data.valid, lang);
    double after = 0.0;
    double n = 0.0;
    for (const auto& e : data.valid) {
      if (e.language != lang) continue;
      const Matrix y = swapped.Forward(e.input, OtherLanguage(lang));
      after += (y - e.target).squaredNorm();
      n += static_cast<double>(y.size());
    }
    CHECK(after / n == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("untrained model predicts the output mean") {
  const TrainingData& data = TinyData();
  TrainedModel m(TinyArch(Variant::kLS));
  m.network.Initialize(1);
  m.input_stats = data.input_stats;
  m.output_stats = data.output_stats;
  const Matrix raw = data.input_stats.Invert(data.valid.front().input);
  const Matrix y = m.Predict(raw, LanguageId::kB);
  for (int t = 0; t < y.rows(); ++t)
    CHECK((y.row(t).transpose() - data.output_stats.mean).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("training data loading") {
  const TrainingData& data = TinyData();
  CHECK(data.train.size() == 12);
  CHECK(data.valid.size() == 4);
  CHECK(data.input_dim() == testing::TinyCorpus().union_dim() + 4);
  CHECK(data.output_dim() == 3 * 4 + 7);
  // Standardized training inputs have zero mean per dimension.
  Vector sum = Vector::Zero(data.input_dim());
  double frames = 0;
  for (const auto& e : data.train) {
    sum += e.input.colwise().sum().transpose();
    frames += e.input.rows();
  }
  CHECK((sum / frames).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("training is deterministic and resumes bit-exactly") {
  const TrainingData& data = TinyData();
  TrainHyper h = TinyHyper();
  h.max_epochs = 4;
  h.patience = 100;
  Trainer a(TinyArch(Variant::kLS), data, h, 7);
  a.Train();
  Trainer b(TinyArch(Variant::kLS), data, h, 7);
  b.Train();
  REQUIRE(a.history().size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.history()[i].epoch == i + 1);
    CHECK(a.history()[i].train_mse == b.history()[i].train_mse);
    CHECK(a.history()[i].valid_mse == b.history()[i].valid_mse);
  }

  // Two epochs, checkpoint through a file, two more epochs.
  const fs::path dir = testing::ScratchDir("resume");
  TrainHyper h2 = h;
  h2.max_epochs = 2;
  Trainer c(TinyArch(Variant::kLS), data, h2, 7);
  c.Train();
  WriteCheckpoint(dir / "c.ckpt", c.ToCheckpoint());
  Trainer d = Trainer::FromCheckpoint(ReadCheckpoint(dir / "c.ckpt"), data);
  CHECK(d.epoch() == 2);
  d.set_max_epochs(4);
  d.Train();
  REQUIRE(d.history().size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(d.history()[i].train_mse == a.history()[i].train_mse);
    CHECK(d.history()[i].valid_mse == a.history()[i].valid_mse);
  }
  const ParamStore& pa = a.model().params();
  const ParamStore& pd = d.model().params();
  for (int i = 0; i < pa.size(); ++i)
    CHECK(std::memcmp(pa.value(i).data(), pd.value(i).data(), sizeof(double) * pa.value(i).size()) == 0);

  WriteHistoryTable(dir / "history.tsv", a.history());
  const std::string table = testing::ReadBytes(dir / "history.tsv");
  CHECK(table.rfind("epoch\ttrain_mse_A\ttrain_mse_B\tvalid_mse_A\tvalid_mse_B\tvalid_mse_mean\n", 0) == 0);
}

TEST_CASE("training reduces validation error and keeps the best model") {
  const TrainingData& data = TinyData();
  TrainHyper h = TinyHyper();
  h.max_epochs = 15;
  Trainer t(TinyArch(Variant::kLS), data, h, 3);
  const double initial = t.best_valid();
  t.Train();
  CHECK(t.best_valid() < initial);
  CHECK(t.best_epoch() >= 1);
  const double best = 0.5 * (t.Evaluate(t.best_model(), data.valid, LanguageId::kA) +
                             t.Evaluate(t.best_model(), data.valid, LanguageId::kB));
  CHECK(best == t.best_valid());
}

TEST_CASE("early stopping with patience") {
  const TrainingData& data = TinyData();
  TrainHyper h = TinyHyper();
  h.lr = 5.0;  // too large to improve on the initial model
  h.patience = 2;
  h.max_epochs = 50;
  Trainer t(TinyArch(Variant::kLI), data, h, 4);
  t.Train();
  CHECK(t.history().size() < 50u);
}

TEST_CASE("divergence names the batch") {
  const TrainingData& data = TinyData();
  TrainHyper h = TinyHyper();
  h.lr = 1e200;
  h.momentum = 0.0;
  h.clip_norm = 0.0;
  Trainer t(TinyArch(Variant::kLS), data, h, 5);
  t.mutable_model().Initialize(5, false);
  try {
    t.Train();
    FAIL("expected divergence");
  } catch (const TrainingDivergence& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch 1 batch") != std::string::npos);
    CHECK(what.find("language") != std::string::npos);
  }
}

TEST_CASE("trained model checkpoint carries what conversion needs") {
  const TrainingData& data = TinyData();
  Trainer t(TinyArch(Variant::kLS), data, TinyHyper(), 6);
  t.Train();
  const fs::path dir = testing::ScratchDir("trained_model");
  WriteCheckpoint(dir / "model.ckpt", t.ToCheckpoint());
  const TrainedModel m = LoadTrainedModel(dir / "model.ckpt");
  CHECK(m.regime == PpgKind::kMixedLingual);
  CHECK(m.mcc_dim == 4);
  CHECK(m.manifest_path == data.manifest_path);
  CHECK(m.input_stats.mean == data.input_stats.mean);
  CHECK(m.output_stats.stddev == data.output_stats.stddev);
  CHECK(m.checkpoint_hash.size() == 16);
  const Matrix raw = data.input_stats.Invert(data.valid.front().input);
  const Matrix expect = data.output_stats.Invert(t.best_model().Forward(data.valid.front().input, LanguageId::kA));
  CHECK((m.Predict(raw, LanguageId::kA) - expect).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("hyperparameter validation") {
  TrainHyper h;
  h.loss_reduction = "median";
  CHECK_THROWS_AS(h.Validate(), ConfigError);
  h = TrainHyper{};
  h.momentum = 1.0;
  CHECK_THROWS_AS(h.Validate(), ConfigError);
}

}  // namespace
}  // namespace xlvc
