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

#ifndef XLVC_SYNTHCORPUS_CORPUS_H_
#define XLVC_SYNTHCORPUS_CORPUS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "xlvc/features/manifest.h"
#include "xlvc/synthcorpus/world.h"

namespace xlvc {

// Files written under the output directory:
//   world.cfg                      generative config (rebuilds the world)
//   spk/<speaker>.xvcf             synthetic speaker identity vectors
//   acoustic/, latent/             per-utterance XVCF files
//   ppg/bppg/, ppg/mppg/           stacked and mixed posteriorgrams
//   bppg.manifest, mppg.manifest   train + validation records
//   test.bppg.manifest, test.mppg.manifest
//                                  parallel test renderings: every test
//                                  content spoken by every speaker
struct CorpusLayout {
  std::filesystem::path root;

  std::filesystem::path world_config() const { return root / "world.cfg"; }
  std::filesystem::path manifest(PpgKind regime) const;
  std::filesystem::path test_manifest(PpgKind regime) const;
  std::filesystem::path speaker_file(const std::string& speaker_id) const;
};

struct CorpusSummary {
  CorpusLayout layout;
  int train_records = 0;
  int validation_records = 0;
  int test_records = 0;
  double rendering_gap = 0.0;
};

std::string SpeakerName(LanguageId lang, int index);

CorpusSummary GenerateCorpus(const GenerativeConfig& cfg, const std::filesystem::path& out_dir, int threads = 1);

// Rebuilds the config stored in world.cfg of a corpus directory.
GenerativeConfig LoadCorpusConfig(const std::filesystem::path& corpus_root);

// Writes PPG files for `regime` from the stored latent trajectories and a
// matching pair of manifests. Used for the monolingual regimes, which the
// generator does not emit by default.
void ExtractCorpusPpg(const std::filesystem::path& corpus_root, PpgKind regime, int threads = 1);

}  // namespace xlvc

#endif  // XLVC_SYNTHCORPUS_CORPUS_H_
