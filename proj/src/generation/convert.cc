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

#include "xlvc/generation/convert.h"

#include "xlvc/features/feature_file.h"
#include "xlvc/synthcorpus/speaker_embedding.h"

namespace xlvc {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto Stage(const std::string& context, const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(context + ": " + stage + ": " + e.what());
  }
}

}  // namespace

void ConvertOptions::Bind(ConfigSchema& s, const std::string& p) {
  s.Bind(p + "postfilter_beta", &postfilter_beta, "cepstral postfilter gain on coefficients >= 2 (1 disables)");
}

ConvertedUtterance ConvertFeatures(const TrainedModel& model, const Matrix& source_ppg,
                                   const Matrix& source_acoustic, const SpeakerEmbedding& target,
                                   const F0Stats& target_f0, LanguageId target_lang,
                                   const ConvertOptions& options) {
  const AcousticLayout layout{model.mcc_dim};
  const int d = layout.mcc_dim;
  if (target.dim() != model.embedding.dim)
    throw Error("target embedding has dimension " + std::to_string(target.dim()) + ", model expects " +
                std::to_string(model.embedding.dim));
  if (source_acoustic.cols() != layout.width()) throw Error("source acoustic width does not match the model");
  if (source_acoustic.rows() != source_ppg.rows()) throw Error("source PPG and acoustic frame counts differ");

  ConvertedUtterance out;
  out.predicted = model.Predict(BuildInputFrames(source_ppg, target), target_lang);
  const int frames = static_cast<int>(out.predicted.rows());
  const Vector variance = model.output_stats.Variance();

  Matrix mcc = Mlpg(out.predicted.middleCols(layout.mcc(), 3 * d),
                    GlobalVariances::Floored(variance.segment(layout.mcc(), 3 * d)));
  mcc = CepstralPostfilter(mcc, options.postfilter_beta);
  const Matrix lf0 =
      Mlpg(out.predicted.middleCols(layout.lf0(), 3), GlobalVariances::Floored(variance.segment(layout.lf0(), 3)));

  Vector vuv(frames);
  for (int t = 0; t < frames; ++t) vuv(t) = out.predicted(t, layout.vuv()) >= 0.5 ? 1.0 : 0.0;

  const Vector src_vuv = source_acoustic.col(layout.vuv());
  const Vector src_lf0 = source_acoustic.col(layout.lf0());
  out.source_f0 = ComputeF0Stats(src_lf0, src_vuv);
  const Vector converted = ConvertF0(src_lf0, src_vuv, out.source_f0, target_f0);
  Matrix lf0_out(frames, 1);
  for (int t = 0; t < frames; ++t)
    lf0_out(t, 0) = (vuv(t) > 0.5 && src_vuv(t) >= 0.5) ? converted(t) : lf0(t, 0);

  out.acoustic.resize(frames, layout.width());
  out.acoustic.col(layout.vuv()) = vuv;
  out.acoustic.middleCols(layout.mcc(), 3 * d) = ApplyDeltas(mcc);
  out.acoustic.middleCols(layout.lf0(), 3) = ApplyDeltas(lf0_out);
  out.acoustic.middleCols(layout.ap(), 3) = source_acoustic.middleCols(layout.ap(), 3);
  return out;
}

F0Stats SpeakerF0Stats(const Manifest& manifest, const std::string& speaker_id) {
  std::vector<double> lf0, vuv;
  for (const UtteranceRecord* r : manifest.Select(Split::kTrain)) {
    if (r->speaker_id != speaker_id) continue;
    const Matrix a = ReadFeatureMatrix(manifest.Resolve(r->acoustic_path), KindCode::kAcoustic);
    const AcousticLayout layout = AcousticLayout::FromWidth(static_cast<int>(a.cols()));
    for (int t = 0; t < a.rows(); ++t) {
      lf0.push_back(a(t, layout.lf0()));
      vuv.push_back(a(t, layout.vuv()));
    }
  }
  if (lf0.empty()) throw Error("no training utterances for speaker " + speaker_id);
  return ComputeF0Stats(Eigen::Map<const Vector>(lf0.data(), static_cast<Eigen::Index>(lf0.size())),
                        Eigen::Map<const Vector>(vuv.data(), static_cast<Eigen::Index>(vuv.size())));
}

ConversionContext::ConversionContext(const TrainedModel& model)
    : ConversionContext(model, ReadManifest(model.manifest_path)) {}

ConversionContext::ConversionContext(const TrainedModel& model, Manifest training)
    : model_(&model), training_(std::move(training)) {
  for (const auto& r : training_.records) language_.emplace(r.speaker_id, r.language);
  for (const auto& [spk, lang] : language_) {
    embeddings_[spk] =
        ProvideSpeakerEmbedding(spk, model.embedding.mode, model.embedding.dim, model.embedding.seed, training_);
    f0_[spk] = SpeakerF0Stats(training_, spk);
  }
}

const SpeakerEmbedding& ConversionContext::Embedding(const std::string& speaker_id) const {
  auto it = embeddings_.find(speaker_id);
  if (it == embeddings_.end()) throw Error("unknown target speaker " + speaker_id);
  return it->second;
}

const F0Stats& ConversionContext::TargetF0(const std::string& speaker_id) const {
  auto it = f0_.find(speaker_id);
  if (it == f0_.end()) throw Error("unknown target speaker " + speaker_id);
  return it->second;
}

LanguageId ConversionContext::SpeakerLanguage(const std::string& speaker_id) const {
  auto it = language_.find(speaker_id);
  if (it == language_.end()) throw Error("unknown target speaker " + speaker_id);
  return it->second;
}

std::string FormatConversionLog(const ConversionLogRecord& r) {
  return "source=" + r.source_utterance + " target=" + r.target_speaker +
         " lang=" + std::string(LanguageName(r.target_language)) + " regime=" + std::string(PpgKindName(r.regime)) +
         " checkpoint=" + r.checkpoint_hash + " output=" + r.output.string();
}

ConvertedUtterance ConvertUtterance(const ConversionContext& context, const Manifest& source_manifest,
                                    const UtteranceRecord& source, const std::string& target_speaker,
                                    const fs::path& output, const ConvertOptions& options,
                                    ConversionLogRecord* log) {
  const TrainedModel& model = context.model();
  const std::string where = "convert " + source.utterance_id + " -> " + target_speaker;
  if (source_manifest.regime != model.regime)
    throw Error(where + ": regime mismatch: checkpoint was trained on " + std::string(PpgKindName(model.regime)) +
                ", source manifest provides " + std::string(PpgKindName(source_manifest.regime)));
  const Matrix ppg = Stage(where, "load PPG", [&] {
    return ReadFeatureMatrix(source_manifest.Resolve(source.ppg_path), PpgKindCode(source_manifest.regime));
  });
  const Matrix acoustic = Stage(where, "load source acoustics", [&] {
    return ReadFeatureMatrix(source_manifest.Resolve(source.acoustic_path), KindCode::kAcoustic);
  });
  const SpeakerEmbedding& embedding = Stage(where, "target speaker", [&]() -> const SpeakerEmbedding& {
    return context.Embedding(target_speaker);
  });
  const LanguageId lang = context.SpeakerLanguage(target_speaker);
  ConvertedUtterance result = Stage(where, "generate", [&] {
    return ConvertFeatures(model, ppg, acoustic, embedding, context.TargetF0(target_speaker), lang, options);
  });
  if (!output.empty()) {
    Stage(where, "write output", [&] {
      if (output.has_parent_path()) fs::create_directories(output.parent_path());
      WriteFeatureFile(output, KindCode::kAcoustic, result.acoustic);
      return 0;
    });
  }
  if (log) *log = ConversionLogRecord{source.utterance_id, target_speaker, lang, model.regime,
                                      model.checkpoint_hash, output};
  return result;
}

}  // namespace xlvc
