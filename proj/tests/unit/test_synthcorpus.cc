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

#include <algorithm>
#include <chrono>
#include <map>

#include "test_util.h"
#include "xlvc/features/feature_file.h"
#include "xlvc/features/manifest.h"
#include "xlvc/rng.h"
#include "xlvc/synthcorpus/corpus.h"
#include "xlvc/synthcorpus/speaker_embedding.h"
#include "xlvc/synthcorpus/world.h"

namespace xlvc {
namespace {

namespace fs = std::filesystem;
using testing::ReadBytes;
using testing::ScratchDir;
using testing::TinyCorpus;

std::map<std::string, std::string> DirectoryBytes(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = ReadBytes(e.path());
  return files;
}

TEST_CASE("noiseless constant latent renders constant statics") {
  GenerativeConfig cfg = TinyCorpus();
  cfg.noise_sigma = 0.0;
  cfg.speakers_per_language = 1;
  const WorldModel world = WorldModel::Build(cfg);
  UtteranceContent c;
  c.language = LanguageId::kA;
  c.latent = world.anchors().row(0).replicate(12, 1);
  c.target_anchor.assign(12, 0);
  const SpeakerEmbedding spk = SyntheticSpeakerEmbedding("A-s0", cfg.spk_dim, cfg.seed);
  auto rng = MakeStream(1);
  const Matrix ac = RenderAcoustic(world, c, LanguageId::kA, spk, rng);
  const AcousticLayout l{cfg.mcc_dim};
  for (int t = 1; t < 12; ++t) CHECK(ac.row(t) == ac.row(0));
  CHECK(ac.middleCols(l.delta_mcc(), 2 * cfg.mcc_dim).isZero(0.0));
  CHECK(ac(0, l.vuv()) == 1.0);
}

TEST_CASE("swapping renderings changes every voiced frame") {
  GenerativeConfig cfg = TinyCorpus();
  cfg.noise_sigma = 0.0;
  const WorldModel world = WorldModel::Build(cfg);
  CHECK(world.RenderingGap() > 0.1);
  auto rng = MakeStream(5);
  const UtteranceContent c = SampleContent(world, LanguageId::kA, rng);
  const SpeakerEmbedding spk = SyntheticSpeakerEmbedding("A-s0", cfg.spk_dim, cfg.seed);
  auto n1 = MakeStream(1), n2 = MakeStream(1);
  const Matrix a = RenderAcoustic(world, c, LanguageId::kA, spk, n1);
  const Matrix b = RenderAcoustic(world, c, LanguageId::kB, spk, n2);
  const AcousticLayout l{cfg.mcc_dim};
  const Vector vuv = c.Voicing(world.silence_index());
  int voiced = 0;
  for (int t = 0; t < c.frames(); ++t) {
    if (vuv(t) < 0.5) continue;
    ++voiced;
    CHECK((a.row(t).segment(l.mcc(), cfg.mcc_dim) - b.row(t).segment(l.mcc(), cfg.mcc_dim)).norm() > 0.0);
  }
  CHECK(voiced > 0);

  GenerativeConfig same = cfg;
  same.language_divergence = 0.0;
  CHECK(WorldModel::Build(same).RenderingGap() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("content has silence at both ends and voicing follows silence") {
  const WorldModel world = WorldModel::Build(TinyCorpus());
  auto rng = MakeStream(9);
  for (int i = 0; i < 10; ++i) {
    const UtteranceContent c = SampleContent(world, i % 2 ? LanguageId::kB : LanguageId::kA, rng);
    const GenerativeConfig cfg = TinyCorpus();
    CHECK(c.frames() >= cfg.min_frames);
    CHECK(c.frames() <= cfg.max_frames);
    CHECK(c.target_anchor.front() == world.silence_index());
    CHECK(c.target_anchor.back() == world.silence_index());
    const int lo = world.phone_begin(c.language), hi = lo + world.phone_count(c.language);
    for (int a : c.target_anchor) CHECK((a == world.silence_index() || (a >= lo && a < hi)));
  }
}

TEST_CASE("recognizer regimes") {
  const GenerativeConfig cfg = TinyCorpus();
  const WorldModel world = WorldModel::Build(cfg);
  auto rng = MakeStream(11);
  const UtteranceContent c = SampleContent(world, LanguageId::kA, rng);

  SUBCASE("dimensions and class order") {
    CHECK(ExtractPpg(c.latent, PpgKind::kMonoA, world, 0.5).dim() == cfg.dim_a());
    CHECK(ExtractPpg(c.latent, PpgKind::kMonoB, world, 0.5).dim() == cfg.dim_b());
    CHECK(ExtractPpg(c.latent, PpgKind::kMixedLingual, world, 0.5).dim() == cfg.union_dim());
    const Posteriorgram s = ExtractPpg(c.latent, PpgKind::kBilingualStacked, world, 0.5);
    CHECK(s.dim() == cfg.dim_a() + cfg.dim_b());
    CHECK(s.block_a_dim == cfg.dim_a());
  }

  SUBCASE("rows are normalized") {
    for (PpgKind k : {PpgKind::kMonoA, PpgKind::kMonoB, PpgKind::kBilingualStacked, PpgKind::kMixedLingual}) {
      const Posteriorgram p = ExtractPpg(c.latent, k, world, 0.5);
      CHECK(ValidatePosteriorgram(p, 1e-6).empty());
      const double want = k == PpgKind::kBilingualStacked ? 2.0 : 1.0;
      for (int t = 0; t < p.num_frames(); ++t) CHECK(std::abs(p.frames.row(t).sum() - want) <= want * 1e-6);
    }
  }

  SUBCASE("low temperature at an anchor is one-hot") {
    const int j = 2;
    const Matrix z = world.anchors().row(j);
    const Posteriorgram p = ExtractPpg(z, PpgKind::kMixedLingual, world, 1e-4);
    CHECK(p.frames(0, j) == doctest::Approx(1.0).epsilon(1e-12));
    const Posteriorgram s = ExtractPpg(world.anchors().row(world.silence_index()), PpgKind::kMixedLingual, world, 1e-4);
    CHECK(s.frames(0, cfg.union_dim() - 1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("stacked recognizer inflates spurious posteriors of the other language") {
    // Language-A frames sampled around A anchors and displaced away from the
    // B anchor centroid, so every B anchor is distant.
    const GenerativeConfig def;
    const WorldModel w = WorldModel::Build(def);
    const RowVector b_center = w.anchors().middleRows(def.phones_a, def.phones_b).colwise().mean();
    auto frame_rng = MakeStream(12);
    int tested = 0;
    for (double push : {0.5, 1.0, 2.0}) {
      for (int k = 0; k < def.phones_a; ++k) {
        const RowVector a = w.anchors().row(k) + RandomNormal(frame_rng, 1, def.latent_dim, 0.05);
        const Matrix z = a + push * (a - b_center).normalized();
        const Posteriorgram mixed = ExtractPpg(z, PpgKind::kMixedLingual, w, def.temperature);
        const Posteriorgram stacked = ExtractPpg(z, PpgKind::kBilingualStacked, w, def.temperature);
        const double mixed_b = mixed.frames.row(0).segment(def.phones_a, def.phones_b).sum();
        const double stacked_b = stacked.frames.row(0).segment(def.dim_a(), def.phones_b).maxCoeff();
        CHECK(mixed_b < stacked_b);
        ++tested;
      }
    }
    CHECK(tested == 60);
  }

  CHECK_THROWS(ExtractPpg(Matrix::Zero(3, cfg.latent_dim + 1), PpgKind::kMixedLingual, world, 0.5));
}

TEST_CASE("synthetic speaker embeddings") {
  const SpeakerEmbedding a = SyntheticSpeakerEmbedding("A-s0", 16, 3);
  const SpeakerEmbedding again = SyntheticSpeakerEmbedding("A-s0", 16, 3);
  CHECK(a.values == again.values);
  CHECK(std::abs(a.values.norm() - 1.0) <= 1e-12);
  CHECK(SyntheticSpeakerEmbedding("A-s0", 16, 4).values != a.values);

  std::vector<SpeakerEmbedding> all;
  for (LanguageId l : {LanguageId::kA, LanguageId::kB})
    for (int i = 0; i < 4; ++i) all.push_back(SyntheticSpeakerEmbedding(SpeakerName(l, i), 16, 1));
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) CHECK(all[i].values.dot(all[j].values) < 0.9);
}

TEST_CASE("tiny corpus generation") {
  const GenerativeConfig cfg = TinyCorpus();
  const fs::path one = ScratchDir("corpus_one"), two = ScratchDir("corpus_two");
  const CorpusSummary s = GenerateCorpus(cfg, one, 1);
  GenerateCorpus(cfg, two, 3);

  SUBCASE("byte-identical across runs and thread counts") { CHECK(DirectoryBytes(one) == DirectoryBytes(two)); }

  SUBCASE("counts and manifests") {
    CHECK(s.train_records == 2 * 2 * 3);
    CHECK(s.validation_records == 2 * 2 * 1);
    CHECK(s.test_records == 2 * 2 * 2 * 2);
    for (PpgKind k : {PpgKind::kBilingualStacked, PpgKind::kMixedLingual}) {
      const Manifest m = ReadManifest(s.layout.manifest(k));
      CHECK(m.regime == k);
      CHECK(m.records.size() == 16);
      CHECK(VerifyManifest(m).empty());
      const Manifest t = ReadManifest(s.layout.test_manifest(k));
      CHECK(t.records.size() == 16);
      CHECK(VerifyManifest(t).empty());
    }
    CHECK(LoadCorpusConfig(one).seed == cfg.seed);
  }

  SUBCASE("acoustic files follow the generative contract") {
    const Manifest m = ReadManifest(s.layout.manifest(PpgKind::kMixedLingual));
    const AcousticLayout l{cfg.mcc_dim};
    for (const auto& r : m.records) {
      const Matrix ac = ReadFeatureMatrix(m.Resolve(r.acoustic_path), KindCode::kAcoustic);
      REQUIRE(ac.cols() == l.width());
      CHECK(ac.rows() == r.frames);
      CHECK(((ac.col(0).array() == 0.0) || (ac.col(0).array() == 1.0)).all());
      // Unvoiced frames carry the speaker's base logF0.
      double base = 0.0;
      bool have = false;
      for (int t = 0; t < ac.rows(); ++t) {
        if (ac(t, 0) != 0.0) continue;
        if (!have) base = ac(t, l.lf0());
        have = true;
        CHECK(ac(t, l.lf0()) == base);
      }
      CHECK(have);
    }
  }

  SUBCASE("test contents are rendered by every speaker") {
    const Manifest t = ReadManifest(s.layout.test_manifest(PpgKind::kMixedLingual));
    std::map<std::string, std::vector<std::string>> by_content;
    for (const auto& r : t.records) by_content[r.content_id].push_back(r.speaker_id);
    CHECK(by_content.size() == 4);
    for (auto& [content, speakers] : by_content) CHECK(speakers.size() == 4);
  }

  SUBCASE("monolingual extraction") {
    ExtractCorpusPpg(one, PpgKind::kMonoB, 2);
    const Manifest m = ReadManifest(s.layout.manifest(PpgKind::kMonoB));
    CHECK(m.records.size() == 16);
    for (const auto& r : m.records) {
      Posteriorgram p;
      p.kind = PpgKind::kMonoB;
      p.frames = ReadFeatureMatrix(m.Resolve(r.ppg_path), KindCode::kMonoBPpg);
      CHECK(p.dim() == cfg.dim_b());
      CHECK(ValidatePosteriorgram(p, 1e-6).empty());
    }
  }

  SUBCASE("mcc statistics embeddings") {
    const Manifest m = ReadManifest(s.layout.manifest(PpgKind::kMixedLingual));
    const SpeakerEmbedding e = MccStatsSpeakerEmbedding("A-s1", m, 6);
    CHECK(e.dim() == 6);
    CHECK(std::abs(e.values.norm() - 1.0) <= 1e-12);
    CHECK(MccStatsSpeakerEmbedding("A-s1", m, 20).dim() == 20);
    CHECK_THROWS(MccStatsSpeakerEmbedding("C-s9", m, 6));
  }
}

TEST_CASE("default corpus has 240 training and validation records") {
  const fs::path dir = ScratchDir("corpus_default");
  const auto start = std::chrono::steady_clock::now();
  const CorpusSummary s = GenerateCorpus(GenerativeConfig{}, dir, 1);
  MESSAGE("default corpus generated in "
          << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s");
  CHECK(s.train_records + s.validation_records == 240);
  CHECK(ReadManifest(s.layout.manifest(PpgKind::kMixedLingual)).records.size() == 240);
  const Manifest m = ReadManifest(s.layout.manifest(PpgKind::kBilingualStacked));
  std::map<std::string, int> per_speaker;
  for (const auto& r : m.records) ++per_speaker[r.speaker_id];
  CHECK(per_speaker.size() == 8);
  for (const auto& [spk, n] : per_speaker) CHECK(n == 30);
}

TEST_CASE("invalid generative configs are rejected") {
  GenerativeConfig c;
  c.temperature = 0.0;
  CHECK_THROWS(c.Validate());
  c = GenerativeConfig{};
  c.validation_per_speaker = 30;
  CHECK_THROWS(c.Validate());
  c = GenerativeConfig{};
  c.max_frames = 10;
  CHECK_THROWS(c.Validate());
}

}  // namespace
}  // namespace xlvc
