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

#include "xlvc/synthcorpus/corpus.h"

#include <cstdio>
#include <fstream>

#include "xlvc/features/feature_file.h"
#include "xlvc/parallel.h"
#include "xlvc/rng.h"
#include "xlvc/synthcorpus/speaker_embedding.h"

namespace xlvc {

namespace fs = std::filesystem;

namespace {

enum CorpusStream : uint64_t { kContent = 11, kNoise = 12, kTestContent = 13, kTestNoise = 14 };

constexpr PpgKind kDefaultRegimes[] = {PpgKind::kBilingualStacked, PpgKind::kMixedLingual};

struct Job {
  UtteranceRecord record;
  LanguageId content_lang;
  std::mt19937_64 content_rng;
  std::mt19937_64 noise_rng;
};

std::string Pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, v);
  return buf;
}

fs::path PpgPath(PpgKind regime, const std::string& utt) {
  return fs::path("ppg") / std::string(PpgKindName(regime)) / (utt + ".xvcf");
}

void WritePpg(const fs::path& path, const Posteriorgram& p) {
  WriteFeatureFile(path, PpgKindCode(p.kind), p.frames);
}

}  // namespace

fs::path CorpusLayout::manifest(PpgKind regime) const {
  return root / (std::string(PpgKindName(regime)) + ".manifest");
}

fs::path CorpusLayout::test_manifest(PpgKind regime) const {
  return root / ("test." + std::string(PpgKindName(regime)) + ".manifest");
}

fs::path CorpusLayout::speaker_file(const std::string& speaker_id) const {
  return root / "spk" / (speaker_id + ".xvcf");
}

std::string SpeakerName(LanguageId lang, int index) {
  return std::string(LanguageName(lang)) + "-s" + std::to_string(index);
}

GenerativeConfig LoadCorpusConfig(const fs::path& corpus_root) {
  GenerativeConfig cfg;
  ConfigSchema schema;
  cfg.Bind(schema, "corpus.");
  const fs::path path = CorpusLayout{corpus_root}.world_config();
  schema.Apply(ReadKeyValueFile(path), path.string());
  cfg.Validate();
  return cfg;
}

CorpusSummary GenerateCorpus(const GenerativeConfig& cfg_in, const fs::path& out_dir, int threads) {
  GenerativeConfig cfg = cfg_in;
  const WorldModel world = WorldModel::Build(cfg);
  CorpusSummary summary;
  summary.layout.root = out_dir;
  summary.rendering_gap = world.RenderingGap();

  for (const char* sub : {"acoustic", "latent", "spk", "ppg/bppg", "ppg/mppg"})
    fs::create_directories(out_dir / sub);
  {
    ConfigSchema schema;
    cfg.Bind(schema, "corpus.");
    std::ofstream os(summary.layout.world_config(), std::ios::trunc);
    if (!os) throw Error("cannot write " + summary.layout.world_config().string());
    os << "# xlvc " << kVersion << " synthetic corpus\n" << schema.Echo();
  }

  std::vector<SpeakerEmbedding> speakers[kNumLanguages];
  for (LanguageId lang : {LanguageId::kA, LanguageId::kB})
    for (int s = 0; s < cfg.speakers_per_language; ++s) {
      SpeakerEmbedding e = SyntheticSpeakerEmbedding(SpeakerName(lang, s), cfg.spk_dim, cfg.seed);
      Matrix row = e.values.transpose();
      WriteFeatureFile(summary.layout.speaker_file(e.speaker_id), KindCode::kSpeakerEmbedding, row);
      speakers[static_cast<int>(lang)].push_back(std::move(e));
    }

  std::vector<Job> jobs;
  const int train_per_speaker = cfg.utterances_per_speaker - cfg.validation_per_speaker;
  for (LanguageId lang : {LanguageId::kA, LanguageId::kB}) {
    const auto l = static_cast<uint64_t>(lang);
    for (int s = 0; s < cfg.speakers_per_language; ++s)
      for (int k = 0; k < cfg.utterances_per_speaker; ++k) {
        Job job;
        UtteranceRecord& r = job.record;
        r.speaker_id = SpeakerName(lang, s);
        r.utterance_id = r.speaker_id + "-u" + Pad(k, 3);
        r.language = lang;
        r.split = k < train_per_speaker ? Split::kTrain : Split::kValidation;
        r.content_id = r.utterance_id;
        job.content_lang = lang;
        job.content_rng = MakeStream(cfg.seed, kContent, l, s, k);
        job.noise_rng = MakeStream(cfg.seed, kNoise, l, s, k);
        jobs.push_back(std::move(job));
      }
  }
  for (LanguageId content_lang : {LanguageId::kA, LanguageId::kB})
    for (int c = 0; c < cfg.test_contents_per_language; ++c)
      for (LanguageId lang : {LanguageId::kA, LanguageId::kB})
        for (int s = 0; s < cfg.speakers_per_language; ++s) {
          Job job;
          UtteranceRecord& r = job.record;
          r.speaker_id = SpeakerName(lang, s);
          r.content_id = std::string(LanguageName(content_lang)) + "-t" + Pad(c, 3);
          r.utterance_id = "test-" + r.content_id + "-" + r.speaker_id;
          r.language = lang;
          r.split = Split::kTest;
          job.content_lang = content_lang;
          job.content_rng = MakeStream(cfg.seed, kTestContent, static_cast<uint64_t>(content_lang), c);
          job.noise_rng = MakeStream(cfg.seed, kTestNoise, static_cast<uint64_t>(content_lang), c,
                                     static_cast<uint64_t>(lang), s);
          jobs.push_back(std::move(job));
        }

  ParallelFor(static_cast<int>(jobs.size()), threads, [&](int i) {
    Job& job = jobs[i];
    UtteranceRecord& r = job.record;
    const UtteranceContent content = SampleContent(world, job.content_lang, job.content_rng);
    const int spk_index = std::stoi(r.speaker_id.substr(r.speaker_id.rfind('s') + 1));
    const SpeakerEmbedding& spk = speakers[static_cast<int>(r.language)][spk_index];
    const Matrix acoustic = RenderAcoustic(world, content, r.language, spk, job.noise_rng);
    r.frames = content.frames();
    r.acoustic_path = fs::path("acoustic") / (r.utterance_id + ".xvcf");
    r.latent_path = fs::path("latent") / (r.utterance_id + ".xvcf");
    WriteFeatureFile(out_dir / r.acoustic_path, KindCode::kAcoustic, acoustic);
    WriteFeatureFile(out_dir / r.latent_path, KindCode::kLatentTrajectory, content.latent);
    for (PpgKind regime : kDefaultRegimes)
      WritePpg(out_dir / PpgPath(regime, r.utterance_id), ExtractPpg(content.latent, regime, world, cfg.temperature));
  });

  for (PpgKind regime : kDefaultRegimes) {
    Manifest corpus{out_dir, regime, {}};
    Manifest test{out_dir, regime, {}};
    for (const Job& job : jobs) {
      UtteranceRecord r = job.record;
      r.ppg_path = PpgPath(regime, r.utterance_id);
      (r.split == Split::kTest ? test : corpus).records.push_back(std::move(r));
    }
    WriteManifest(summary.layout.manifest(regime), corpus);
    WriteManifest(summary.layout.test_manifest(regime), test);
  }
  for (const Job& job : jobs) {
    if (job.record.split == Split::kTrain) ++summary.train_records;
    else if (job.record.split == Split::kValidation) ++summary.validation_records;
    else ++summary.test_records;
  }
  return summary;
}

void ExtractCorpusPpg(const fs::path& corpus_root, PpgKind regime, int threads) {
  const GenerativeConfig cfg = LoadCorpusConfig(corpus_root);
  const WorldModel world = WorldModel::Build(cfg);
  const CorpusLayout layout{corpus_root};
  fs::create_directories(corpus_root / "ppg" / std::string(PpgKindName(regime)));
  // Any existing manifest pair lists the utterances; mppg is always written.
  const std::pair<fs::path, fs::path> pairs[] = {
      {layout.manifest(PpgKind::kMixedLingual), layout.manifest(regime)},
      {layout.test_manifest(PpgKind::kMixedLingual), layout.test_manifest(regime)}};
  for (const auto& [src, dst] : pairs) {
    Manifest m = ReadManifest(src);
    m.regime = regime;
    ParallelFor(static_cast<int>(m.records.size()), threads, [&](int i) {
      UtteranceRecord& r = m.records[i];
      const Matrix latent = ReadFeatureMatrix(m.Resolve(r.latent_path), KindCode::kLatentTrajectory);
      r.ppg_path = PpgPath(regime, r.utterance_id);
      WritePpg(m.Resolve(r.ppg_path), ExtractPpg(latent, regime, world, cfg.temperature));
    });
    WriteManifest(dst, m);
  }
}

}  // namespace xlvc
