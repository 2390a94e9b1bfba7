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

#include "xlvc/synthcorpus/world.h"

#include <algorithm>
#include <cmath>

#include "xlvc/generation/parameter_generation.h"
#include "xlvc/rng.h"

namespace xlvc {

namespace {

// Stream tags for the world's random components.
enum WorldStream : uint64_t {
  kAnchors = 1,
  kArticulation = 2,
  kRendering = 3,
  kSpeakerMap = 4,
  kPitch = 5,
  kAperiodicity = 6,
  kSpeakerPitch = 7,
};

constexpr uint64_t kWorldTag = 0x776f726c64ULL;  // "world"

}  // namespace

void GenerativeConfig::Bind(ConfigSchema& s, const std::string& p) {
  s.Bind(p + "latent_dim", &latent_dim, "latent phonetic space dimension");
  s.Bind(p + "phones_a", &phones_a, "language-A phone anchors (plus shared silence)");
  s.Bind(p + "phones_b", &phones_b, "language-B phone anchors (plus shared silence)");
  s.Bind(p + "mcc_dim", &mcc_dim, "MCC static dimension D");
  s.Bind(p + "spk_dim", &spk_dim, "speaker embedding dimension");
  s.Bind(p + "speakers_per_language", &speakers_per_language, "speakers per language");
  s.Bind(p + "utterances_per_speaker", &utterances_per_speaker, "train + validation utterances per speaker");
  s.Bind(p + "validation_per_speaker", &validation_per_speaker, "of which held out for validation");
  s.Bind(p + "test_contents_per_language", &test_contents_per_language,
         "parallel test contents per language, rendered by every speaker");
  s.Bind(p + "min_frames", &min_frames, "shortest utterance");
  s.Bind(p + "max_frames", &max_frames, "longest utterance");
  s.Bind(p + "min_phone_frames", &min_phone_frames, "shortest phone segment");
  s.Bind(p + "max_phone_frames", &max_phone_frames, "longest phone segment");
  s.Bind(p + "temperature", &temperature, "recognizer softmax temperature");
  s.Bind(p + "noise_sigma", &noise_sigma, "MCC observation noise standard deviation");
  s.Bind(p + "smoothing", &smoothing, "latent moving-average coefficient");
  s.Bind(p + "latent_jitter", &latent_jitter, "latent random-walk step standard deviation");
  s.Bind(p + "anchor_spread", &anchor_spread, "anchor standard deviation per latent axis");
  s.Bind(p + "articulation_gain", &articulation_gain, "pre-tanh gain of the articulation map");
  s.Bind(p + "speaker_scale", &speaker_scale, "speaker offset map standard deviation");
  s.Bind(p + "language_divergence", &language_divergence,
         "0 = identical renderings, 1 = independent rendering matrices");
  s.Bind(p + "seed", &seed, "corpus seed");
}

void GenerativeConfig::Validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("corpus.") + name + " must be positive");
  };
  positive(latent_dim, "latent_dim");
  positive(phones_a, "phones_a");
  positive(phones_b, "phones_b");
  positive(mcc_dim, "mcc_dim");
  positive(spk_dim, "spk_dim");
  positive(speakers_per_language, "speakers_per_language");
  positive(utterances_per_speaker, "utterances_per_speaker");
  positive(min_frames, "min_frames");
  positive(min_phone_frames, "min_phone_frames");
  if (validation_per_speaker < 0 || validation_per_speaker >= utterances_per_speaker)
    throw ConfigError("corpus.validation_per_speaker must be in [0, utterances_per_speaker)");
  if (test_contents_per_language < 0) throw ConfigError("corpus.test_contents_per_language must be >= 0");
  if (max_frames < min_frames) throw ConfigError("corpus.max_frames < corpus.min_frames");
  if (max_phone_frames < min_phone_frames) throw ConfigError("corpus.max_phone_frames < corpus.min_phone_frames");
  if (!(temperature > 0.0)) throw ConfigError("corpus.temperature must be > 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("corpus.noise_sigma must be >= 0");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ConfigError("corpus.smoothing must be in [0, 1)");
  if (!(latent_jitter >= 0.0)) throw ConfigError("corpus.latent_jitter must be >= 0");
  if (!(anchor_spread > 0.0)) throw ConfigError("corpus.anchor_spread must be > 0");
  if (!(language_divergence >= 0.0 && language_divergence <= 1.0))
    throw ConfigError("corpus.language_divergence must be in [0, 1]");
}

WorldModel WorldModel::Build(const GenerativeConfig& cfg) {
  cfg.Validate();
  WorldModel w;
  w.cfg_ = cfg;
  const int latent = cfg.latent_dim;
  const int d = cfg.mcc_dim;
  const double unit = 1.0 / (std::sqrt(static_cast<double>(latent)) * cfg.anchor_spread);

  auto rng = MakeStream(cfg.seed, kWorldTag, kAnchors);
  w.anchors_ = RandomNormal(rng, cfg.union_dim(), latent, cfg.anchor_spread);

  rng = MakeStream(cfg.seed, kWorldTag, kArticulation);
  w.articulation_ = RandomNormal(rng, d, latent, cfg.articulation_gain * unit);
  w.articulation_bias_ = RandomNormal(rng, d, 1, 0.3).col(0);

  rng = MakeStream(cfg.seed, kWorldTag, kRendering);
  const double r_sigma = 1.0 / std::sqrt(static_cast<double>(d));
  w.rendering_[0] = RandomNormal(rng, d, d, r_sigma);
  const Matrix independent = RandomNormal(rng, d, d, r_sigma);
  w.rendering_[1] = w.rendering_[0] + cfg.language_divergence * (independent - w.rendering_[0]);

  rng = MakeStream(cfg.seed, kWorldTag, kSpeakerMap);
  w.speaker_map_ = RandomNormal(rng, d, cfg.spk_dim, cfg.speaker_scale);

  rng = MakeStream(cfg.seed, kWorldTag, kPitch);
  w.pitch_direction_ = RandomNormal(rng, latent, 1, unit).col(0);
  std::uniform_real_distribution<double> amp(0.1, 0.3);
  w.pitch_amplitude_[0] = amp(rng);
  w.pitch_amplitude_[1] = amp(rng);

  rng = MakeStream(cfg.seed, kWorldTag, kAperiodicity);
  w.ap_direction_ = RandomNormal(rng, latent, 1, unit).col(0);
  return w;
}

Matrix WorldModel::Articulate(const Matrix& latent) const {
  Matrix pre = latent * articulation_.transpose();
  pre.rowwise() += articulation_bias_.transpose();
  return pre.array().tanh().matrix();
}

double WorldModel::RenderingGap() const {
  const Matrix diff = rendering_[0] - rendering_[1];
  Eigen::JacobiSVD<Matrix> svd(diff);
  return svd.singularValues()(0);
}

double WorldModel::PitchContour(LanguageId lang, const RowVector& z) const {
  return pitch_amplitude_[static_cast<int>(lang)] * std::tanh(z.dot(pitch_direction_.transpose()));
}

double WorldModel::Aperiodicity(const RowVector& z) const {
  return 0.4 + 0.15 * std::tanh(z.dot(ap_direction_.transpose()));
}

double WorldModel::BaseLogF0(const std::string& speaker_id) const {
  auto rng = MakeStream(cfg_.seed, kWorldTag, kSpeakerPitch, StringKey(speaker_id));
  std::normal_distribution<double> dist(5.0, 0.2);
  return dist(rng);
}

Vector UtteranceContent::Voicing(int silence_index) const {
  Vector vuv(frames());
  for (int t = 0; t < frames(); ++t) vuv(t) = target_anchor[t] == silence_index ? 0.0 : 1.0;
  return vuv;
}

UtteranceContent SampleContent(const WorldModel& world, LanguageId lang, std::mt19937_64& rng) {
  const GenerativeConfig& cfg = world.config();
  const int silence = world.silence_index();
  std::uniform_int_distribution<int> length(cfg.min_frames, cfg.max_frames);
  std::uniform_int_distribution<int> edge(8, 16);
  std::uniform_int_distribution<int> duration(cfg.min_phone_frames, cfg.max_phone_frames);
  std::uniform_int_distribution<int> phone(0, world.phone_count(lang) - 1);

  UtteranceContent c;
  c.language = lang;
  const int frames = length(rng);
  const int lead = std::min(edge(rng), frames);
  const int tail = std::min(edge(rng), frames - lead);
  c.target_anchor.assign(frames, silence);
  int t = lead;
  int last = -1;
  while (t < frames - tail) {
    int p = phone(rng);
    if (world.phone_count(lang) > 1)
      while (p == last) p = phone(rng);
    last = p;
    const int end = std::min(t + duration(rng), frames - tail);
    for (; t < end; ++t) c.target_anchor[t] = world.phone_begin(lang) + p;
  }

  const Matrix& anchors = world.anchors();
  const double alpha = cfg.smoothing;
  std::normal_distribution<double> jitter(0.0, cfg.latent_jitter);
  c.latent.resize(frames, cfg.latent_dim);
  RowVector z = anchors.row(silence);
  for (int f = 0; f < frames; ++f) {
    z = alpha * z + (1.0 - alpha) * anchors.row(c.target_anchor[f]);
    if (cfg.latent_jitter > 0.0)
      for (int k = 0; k < cfg.latent_dim; ++k) z(k) += jitter(rng);
    c.latent.row(f) = z;
  }
  return c;
}

Matrix RenderAcoustic(const WorldModel& world, const UtteranceContent& content, LanguageId render_lang,
                      const SpeakerEmbedding& speaker, std::mt19937_64& noise_rng) {
  const GenerativeConfig& cfg = world.config();
  const AcousticLayout layout{cfg.mcc_dim};
  const int frames = content.frames();
  if (speaker.dim() != cfg.spk_dim) throw Error("RenderAcoustic: speaker vector dimension mismatch");

  Matrix mcc = world.Articulate(content.latent) * world.rendering(render_lang).transpose();
  const Vector offset = world.speaker_map() * speaker.values;
  mcc.rowwise() += offset.transpose();
  if (cfg.noise_sigma > 0.0) mcc += RandomNormal(noise_rng, frames, cfg.mcc_dim, cfg.noise_sigma);

  const Vector vuv = content.Voicing(world.silence_index());
  const double base = world.BaseLogF0(speaker.speaker_id);
  Matrix lf0(frames, 1), ap(frames, 1);
  for (int t = 0; t < frames; ++t) {
    const RowVector z = content.latent.row(t);
    lf0(t, 0) = vuv(t) > 0.5 ? base + world.PitchContour(render_lang, z) : base;
    ap(t, 0) = world.Aperiodicity(z);
  }

  Matrix out(frames, layout.width());
  out.col(layout.vuv()) = vuv;
  out.middleCols(layout.mcc(), 3 * cfg.mcc_dim) = ApplyDeltas(mcc);
  out.middleCols(layout.lf0(), 3) = ApplyDeltas(lf0);
  out.middleCols(layout.ap(), 3) = ApplyDeltas(ap);
  return out;
}

namespace {

// Softmax over the given anchor rows of -||z - a||^2 / temperature.
Matrix DistanceSoftmax(const Matrix& latent, const Matrix& anchors, const std::vector<int>& rows,
                       double temperature) {
  const int frames = static_cast<int>(latent.rows());
  const int k = static_cast<int>(rows.size());
  Matrix out(frames, k);
  Vector logits(k);
  for (int t = 0; t < frames; ++t) {
    for (int j = 0; j < k; ++j) logits(j) = -(latent.row(t) - anchors.row(rows[j])).squaredNorm() / temperature;
    const double m = logits.maxCoeff();
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += (out(t, j) = std::exp(logits(j) - m));
    out.row(t) /= z;
  }
  return out;
}

std::vector<int> AnchorRows(const WorldModel& world, bool with_a, bool with_b) {
  std::vector<int> rows;
  if (with_a)
    for (int i = 0; i < world.phone_count(LanguageId::kA); ++i) rows.push_back(world.phone_begin(LanguageId::kA) + i);
  if (with_b)
    for (int i = 0; i < world.phone_count(LanguageId::kB); ++i) rows.push_back(world.phone_begin(LanguageId::kB) + i);
  rows.push_back(world.silence_index());
  return rows;
}

}  // namespace

Posteriorgram ExtractPpg(const Matrix& latent, PpgKind regime, const WorldModel& world, double temperature) {
  if (latent.cols() != world.anchors().cols())
    throw Error("ExtractPpg: latent dimension " + std::to_string(latent.cols()) + " does not match world (" +
                std::to_string(world.anchors().cols()) + ")");
  if (!(temperature > 0.0)) throw Error("ExtractPpg: temperature must be > 0");
  Posteriorgram p;
  p.kind = regime;
  const Matrix& anchors = world.anchors();
  switch (regime) {
    case PpgKind::kMonoA:
      p.frames = DistanceSoftmax(latent, anchors, AnchorRows(world, true, false), temperature);
      break;
    case PpgKind::kMonoB:
      p.frames = DistanceSoftmax(latent, anchors, AnchorRows(world, false, true), temperature);
      break;
    case PpgKind::kMixedLingual:
      p.frames = DistanceSoftmax(latent, anchors, AnchorRows(world, true, true), temperature);
      break;
    case PpgKind::kBilingualStacked: {
      const Matrix a = DistanceSoftmax(latent, anchors, AnchorRows(world, true, false), temperature);
      const Matrix b = DistanceSoftmax(latent, anchors, AnchorRows(world, false, true), temperature);
      p.frames.resize(latent.rows(), a.cols() + b.cols());
      p.frames << a, b;
      p.block_a_dim = static_cast<int>(a.cols());
      break;
    }
  }
  return p;
}

}  // namespace xlvc
