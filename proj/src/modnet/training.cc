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

#include "xlvc/modnet/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "xlvc/features/feature_file.h"
#include "xlvc/parallel.h"
#include "xlvc/rng.h"

namespace xlvc {

namespace fs = std::filesystem;

namespace {

constexpr double kStdVarianceFloor = 1e-8;

std::string Str(double v) { return FormatDouble(v); }

double ParseDouble(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("checkpoint: bad number '" + s + "'");
  return v;
}

int ParseInt(const std::string& s) { return static_cast<int>(ParseDouble(s)); }

Matrix RowOf(const Vector& v) { return v.transpose(); }

Vector VectorOf(const Matrix& m) {
  if (m.rows() != 1) throw Error("checkpoint: expected a row tensor");
  return m.row(0).transpose();
}

void StoreStandardizer(Checkpoint& c, const std::string& name, const Standardizer& s) {
  c.AddTensor("stats." + name + ".mean", RowOf(s.mean));
  c.AddTensor("stats." + name + ".std", RowOf(s.stddev));
}

Standardizer LoadStandardizer(const Checkpoint& c, const std::string& name) {
  return Standardizer{VectorOf(c.Tensor("stats." + name + ".mean")), VectorOf(c.Tensor("stats." + name + ".std"))};
}

void StoreArchitecture(Checkpoint& c, const ArchitectureConfig& a) {
  c.SetMeta("arch.variant", std::string(VariantName(a.variant)));
  c.SetMeta("arch.input_dim", std::to_string(a.input_dim));
  c.SetMeta("arch.output_dim", std::to_string(a.output_dim));
  c.SetMeta("arch.projection_width", std::to_string(a.projection_width));
  c.SetMeta("arch.blstm_width", std::to_string(a.blstm_width));
  c.SetMeta("arch.head_width", std::to_string(a.head_width));
}

ArchitectureConfig LoadArchitecture(const Checkpoint& c) {
  ArchitectureConfig a;
  a.variant = ParseVariant(c.Meta("arch.variant"));
  a.input_dim = ParseInt(c.Meta("arch.input_dim"));
  a.output_dim = ParseInt(c.Meta("arch.output_dim"));
  a.projection_width = ParseInt(c.Meta("arch.projection_width"));
  a.blstm_width = ParseInt(c.Meta("arch.blstm_width"));
  a.head_width = ParseInt(c.Meta("arch.head_width"));
  return a;
}

void StoreHeadMap(Checkpoint& c, const ModularNetwork& net) {
  for (LanguageId l : {LanguageId::kA, LanguageId::kB})
    c.SetMeta("head." + std::string(LanguageName(l)), net.HeadName(net.HeadFor(l)));
}

}  // namespace

Standardizer Standardizer::Fit(const std::vector<const Matrix*>& sequences) {
  if (sequences.empty()) throw Error("Standardizer: no data");
  const int dim = static_cast<int>(sequences.front()->cols());
  Vector sum = Vector::Zero(dim);
  long long n = 0;
  for (const Matrix* m : sequences) {
    if (m->cols() != dim) throw Error("Standardizer: inconsistent widths");
    sum += m->colwise().sum().transpose();
    n += m->rows();
  }
  if (n == 0) throw Error("Standardizer: no frames");
  Standardizer s;
  s.mean = sum / static_cast<double>(n);
  Vector sq = Vector::Zero(dim);
  for (const Matrix* m : sequences)
    sq += (m->rowwise() - s.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  s.stddev = (sq / static_cast<double>(n)).cwiseMax(kStdVarianceFloor).cwiseSqrt();
  return s;
}

Matrix Standardizer::Apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error("Standardizer: width mismatch");
  Matrix z = x.rowwise() - mean.transpose();
  z.array().rowwise() /= stddev.transpose().array();
  return z;
}

Matrix Standardizer::Invert(const Matrix& z) const {
  if (z.cols() != mean.size()) throw Error("Standardizer: width mismatch");
  Matrix x = z;
  x.array().rowwise() *= stddev.transpose().array();
  x.rowwise() += mean.transpose();
  return x;
}

TrainingData LoadTrainingData(const fs::path& manifest_path, const EmbeddingSettings& embedding, int threads) {
  TrainingData d;
  d.manifest_path = manifest_path;
  d.embedding = embedding;
  const Manifest manifest = ReadManifest(manifest_path);
  d.regime = manifest.regime;
  const auto train = manifest.Select(Split::kTrain);
  const auto valid = manifest.Select(Split::kValidation);
  if (train.empty()) throw Error("manifest " + manifest_path.string() + " has no training records");
  for (LanguageId l : {LanguageId::kA, LanguageId::kB})
    if (manifest.Select(Split::kTrain, l).empty())
      throw Error("manifest " + manifest_path.string() + " has no training records for language " +
                  std::string(LanguageName(l)));

  std::map<std::string, SpeakerEmbedding> spk;
  for (const auto& id : manifest.Speakers())
    spk[id] = ProvideSpeakerEmbedding(id, embedding.mode, embedding.dim, embedding.seed, manifest);

  const KindCode ppg_code = PpgKindCode(manifest.regime);
  auto load = [&](const std::vector<const UtteranceRecord*>& recs) {
    std::vector<SequenceExample> out(recs.size());
    ParallelFor(static_cast<int>(recs.size()), threads, [&](int i) {
      const UtteranceRecord& r = *recs[i];
      SequenceExample& e = out[i];
      e.utterance_id = r.utterance_id;
      e.speaker_id = r.speaker_id;
      e.language = r.language;
      const Matrix ppg = ReadFeatureMatrix(manifest.Resolve(r.ppg_path), ppg_code);
      e.input = BuildInputFrames(ppg, spk.at(r.speaker_id));
      e.target = ReadFeatureMatrix(manifest.Resolve(r.acoustic_path), KindCode::kAcoustic);
      if (e.input.rows() != e.target.rows())
        throw Error("utterance " + r.utterance_id + ": PPG and acoustic frame counts differ");
    });
    return out;
  };
  d.train = load(train);
  d.valid = load(valid);

  std::vector<const Matrix*> xs, ys;
  for (const auto& e : d.train) {
    xs.push_back(&e.input);
    ys.push_back(&e.target);
  }
  d.input_stats = Standardizer::Fit(xs);
  d.output_stats = Standardizer::Fit(ys);
  d.mcc_dim = AcousticLayout::FromWidth(d.output_dim()).mcc_dim;
  for (auto* set : {&d.train, &d.valid})
    for (auto& e : *set) {
      e.input = d.input_stats.Apply(e.input);
      e.target = d.output_stats.Apply(e.target);
    }
  return d;
}

std::vector<Batch> ScheduleBatches(const std::vector<LanguageId>& languages, int batch_sequences, uint64_t seed,
                                   int epoch) {
  if (batch_sequences < 1) throw Error("batch_sequences must be positive");
  struct Keyed {
    double key;
    int lang;
    Batch batch;
  };
  std::vector<Keyed> all;
  for (int l = 0; l < kNumLanguages; ++l) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(languages.size()); ++i)
      if (static_cast<int>(languages[i]) == l) idx.push_back(i);
    auto rng = MakeStream(seed, 0x7363686564ULL, static_cast<uint64_t>(epoch), static_cast<uint64_t>(l));
    std::shuffle(idx.begin(), idx.end(), rng);
    const int n = static_cast<int>((idx.size() + batch_sequences - 1) / batch_sequences);
    for (int k = 0; k < n; ++k) {
      Batch b;
      b.language = static_cast<LanguageId>(l);
      const std::size_t lo = static_cast<std::size_t>(k) * batch_sequences;
      const std::size_t hi = std::min(idx.size(), lo + batch_sequences);
      b.items.assign(idx.begin() + lo, idx.begin() + hi);
      all.push_back({(k + 0.5) / n, l, std::move(b)});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.lang < b.lang;
  });
  std::vector<Batch> out;
  out.reserve(all.size());
  for (auto& k : all) out.push_back(std::move(k.batch));
  return out;
}

std::vector<NamedBatch> ScheduleManifestBatches(const Manifest& manifest, int batch_sequences, uint64_t seed,
                                                int epoch) {
  const auto recs = manifest.Select(Split::kTrain);
  std::vector<LanguageId> langs;
  for (const auto* r : recs) langs.push_back(r->language);
  std::vector<NamedBatch> out;
  for (const Batch& b : ScheduleBatches(langs, batch_sequences, seed, epoch)) {
    NamedBatch nb;
    nb.language = b.language;
    for (int i : b.items) nb.utterance_ids.push_back(recs[i]->utterance_id);
    out.push_back(std::move(nb));
  }
  return out;
}

void TrainHyper::Bind(ConfigSchema& s, const std::string& p) {
  s.Bind(p + "lr", &lr, "SGD learning rate");
  s.Bind(p + "momentum", &momentum, "SGD momentum");
  s.Bind(p + "clip_norm", &clip_norm, "global gradient norm clip (<= 0 disables)");
  s.Bind(p + "batch_sequences", &batch_sequences, "utterances per language-homogeneous minibatch");
  s.Bind(p + "max_epochs", &max_epochs, "maximum training epochs");
  s.Bind(p + "patience", &patience, "early-stopping patience in epochs");
  s.Bind(p + "target_validation_mse", &target_validation_mse,
         "stop once mean validation MSE falls below this (0 disables)");
  s.Bind(p + "loss_reduction", &loss_reduction, "mean | frame | sequence");
}

void TrainHyper::Validate() const {
  if (!(lr > 0.0) || momentum < 0.0 || momentum >= 1.0) throw ConfigError("invalid learning rate or momentum");
  if (batch_sequences < 1 || max_epochs < 0 || patience < 1) throw ConfigError("invalid batch size, epochs or patience");
  if (loss_reduction != "mean" && loss_reduction != "frame" && loss_reduction != "sequence")
    throw ConfigError("loss_reduction must be 'mean', 'frame' or 'sequence'");
}

Trainer::Trainer(const ArchitectureConfig& arch, const TrainingData& data, const TrainHyper& hyper, uint64_t seed)
    : arch_(arch), data_(&data), hyper_(hyper), seed_(seed), model_(arch), best_(arch) {
  hyper_.Validate();
  if (arch_.input_dim != data.input_dim() || arch_.output_dim != data.output_dim())
    throw Error("architecture widths do not match the training data");
  model_.Initialize(seed_);
  best_ = model_;
  momentum_ = MomentumState::For(model_.params());
  best_valid_ = 0.5 * (Evaluate(model_, data.valid, LanguageId::kA) + Evaluate(model_, data.valid, LanguageId::kB));
}

double Trainer::AccumulateBatch(const Batch& batch) {
  const auto& set = data_->train;
  const int n = static_cast<int>(batch.items.size());
  long long frames = 0;
  for (int i : batch.items) frames += set[i].target.rows();
  const int dim = arch_.output_dim;
  auto scale_for = [&](long long seq_frames) {
    if (hyper_.loss_reduction == "mean") return 1.0 / (static_cast<double>(frames) * dim);
    if (hyper_.loss_reduction == "frame") return 1.0 / static_cast<double>(frames);
    return 1.0 / static_cast<double>(seq_frames);
  };

  std::vector<GradientList> local(n);
  std::vector<double> sse(n, 0.0);
  ParallelFor(n, hyper_.threads, [&](int k) {
    const SequenceExample& e = set[batch.items[k]];
    ModularNetwork::ForwardTape tape;
    const Matrix pred = model_.Forward(e.input, batch.language, &tape);
    const Matrix diff = pred - e.target;
    sse[k] = diff.squaredNorm();
    local[k] = model_.params().ZeroGradients();
    model_.Backward(tape, (2.0 * scale_for(e.target.rows())) * diff, local[k]);
  });
  GradientList& g = model_.params().grads();
  for (int k = 0; k < n; ++k)
    for (std::size_t t = 0; t < g.size(); ++t) g[t] += local[k][t];
  return std::accumulate(sse.begin(), sse.end(), 0.0) / (static_cast<double>(frames) * dim);
}

double Trainer::Evaluate(const ModularNetwork& model, const std::vector<SequenceExample>& set,
                         LanguageId lang) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(set.size()); ++i)
    if (set[i].language == lang) idx.push_back(i);
  if (idx.empty()) return 0.0;
  std::vector<double> sse(idx.size(), 0.0);
  ParallelFor(static_cast<int>(idx.size()), hyper_.threads, [&](int k) {
    const SequenceExample& e = set[idx[k]];
    sse[k] = (model.Forward(e.input, lang) - e.target).squaredNorm();
  });
  long long frames = 0;
  for (int i : idx) frames += set[i].target.rows();
  return std::accumulate(sse.begin(), sse.end(), 0.0) / (static_cast<double>(frames) * arch_.output_dim);
}

EpochRecord Trainer::RunEpoch() {
  if (Finished()) throw Error("training already finished");
  ++epoch_;
  std::vector<LanguageId> langs;
  for (const auto& e : data_->train) langs.push_back(e.language);
  const std::vector<Batch> batches = ScheduleBatches(langs, hyper_.batch_sequences, seed_, epoch_);
  const SgdMomentumOptions opt{hyper_.lr, hyper_.momentum, hyper_.clip_norm};

  EpochRecord rec;
  rec.epoch = epoch_;
  std::array<double, 2> sse = {0.0, 0.0}, count = {0.0, 0.0};
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    const std::string id = "epoch " + std::to_string(epoch_) + " batch " + std::to_string(b) + " (language " +
                           std::string(LanguageName(batch.language)) + ", first utterance " +
                           data_->train[batch.items.front()].utterance_id + ")";
    const double loss = AccumulateBatch(batch);
    if (!std::isfinite(loss)) throw TrainingDivergence("non-finite loss at " + id);
    try {
      SgdMomentumStep(model_.params(), momentum_, opt);
    } catch (const NonFiniteGradientError& e) {
      throw TrainingDivergence(std::string(e.what()) + " at " + id);
    }
    if (!model_.params().AllFinite()) throw TrainingDivergence("non-finite parameters after " + id);
    long long frames = 0;
    for (int i : batch.items) frames += data_->train[i].target.rows();
    const int l = static_cast<int>(batch.language);
    sse[l] += loss * static_cast<double>(frames);
    count[l] += static_cast<double>(frames);
  }
  for (int l = 0; l < 2; ++l) {
    rec.train_mse[l] = count[l] > 0 ? sse[l] / count[l] : 0.0;
    rec.valid_mse[l] = Evaluate(model_, data_->valid, static_cast<LanguageId>(l));
  }
  const double v = rec.mean_valid();
  if (v < best_valid_) {
    best_valid_ = v;
    best_epoch_ = epoch_;
    best_.params().CopyValuesFrom(model_.params());
    epochs_since_best_ = 0;
  } else {
    ++epochs_since_best_;
  }
  if (hyper_.target_validation_mse > 0.0 && v < hyper_.target_validation_mse) reached_target_ = true;
  history_.push_back(rec);
  return rec;
}

bool Trainer::Finished() const {
  return epoch_ >= hyper_.max_epochs || epochs_since_best_ >= hyper_.patience || reached_target_;
}

void Trainer::Train(const std::function<void(const EpochRecord&)>& on_epoch) {
  while (!Finished()) {
    const EpochRecord r = RunEpoch();
    if (on_epoch) on_epoch(r);
  }
}

Checkpoint Trainer::ToCheckpoint() const {
  Checkpoint c;
  c.seed = seed_;
  StoreArchitecture(c, arch_);
  StoreHeadMap(c, model_);
  c.SetMeta("regime", std::string(PpgKindName(data_->regime)));
  c.SetMeta("embedding.mode", std::string(EmbeddingModeName(data_->embedding.mode)));
  c.SetMeta("embedding.dim", std::to_string(data_->embedding.dim));
  c.SetMeta("embedding.seed", std::to_string(data_->embedding.seed));
  c.SetMeta("mcc_dim", std::to_string(data_->mcc_dim));
  c.SetMeta("manifest", data_->manifest_path.string());
  c.SetMeta("train.lr", Str(hyper_.lr));
  c.SetMeta("train.momentum", Str(hyper_.momentum));
  c.SetMeta("train.clip_norm", Str(hyper_.clip_norm));
  c.SetMeta("train.batch_sequences", std::to_string(hyper_.batch_sequences));
  c.SetMeta("train.max_epochs", std::to_string(hyper_.max_epochs));
  c.SetMeta("train.patience", std::to_string(hyper_.patience));
  c.SetMeta("train.target_validation_mse", Str(hyper_.target_validation_mse));
  c.SetMeta("train.loss_reduction", hyper_.loss_reduction);
  c.SetMeta("state.epoch", std::to_string(epoch_));
  c.SetMeta("state.best_epoch", std::to_string(best_epoch_));
  c.SetMeta("state.best_valid", Str(best_valid_));
  c.SetMeta("state.epochs_since_best", std::to_string(epochs_since_best_));
  c.SetMeta("state.reached_target", reached_target_ ? "1" : "0");

  StoreStandardizer(c, "input", data_->input_stats);
  StoreStandardizer(c, "output", data_->output_stats);
  c.AddParams(best_.params(), "best.");
  c.AddParams(model_.params(), "param.");
  const ParamStore& p = model_.params();
  for (int i = 0; i < p.size(); ++i) c.AddTensor("velocity." + p.name(i), momentum_.velocity[i]);
  Matrix hist(static_cast<int>(history_.size()), 5);
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const EpochRecord& r = history_[i];
    hist.row(static_cast<int>(i)) << r.epoch, r.train_mse[0], r.train_mse[1], r.valid_mse[0], r.valid_mse[1];
  }
  if (!history_.empty()) c.AddTensor("history", hist);

  if (config_hash_.empty()) {
    std::string text;
    for (const auto& [k, v] : c.meta)
      if (k.rfind("state.", 0) != 0) text += k + "=" + v + "\n";
    c.config_hash = HexDigest(Fnv1a64(text));
  } else {
    c.config_hash = config_hash_;
  }
  return c;
}

Trainer Trainer::FromCheckpoint(const Checkpoint& c, const TrainingData& data) {
  TrainHyper h;
  h.lr = ParseDouble(c.Meta("train.lr"));
  h.momentum = ParseDouble(c.Meta("train.momentum"));
  h.clip_norm = ParseDouble(c.Meta("train.clip_norm"));
  h.batch_sequences = ParseInt(c.Meta("train.batch_sequences"));
  h.max_epochs = ParseInt(c.Meta("train.max_epochs"));
  h.patience = ParseInt(c.Meta("train.patience"));
  h.target_validation_mse = ParseDouble(c.Meta("train.target_validation_mse"));
  h.loss_reduction = c.Meta("train.loss_reduction");
  if (c.Meta("regime") != PpgKindName(data.regime))
    throw Error("checkpoint regime " + c.Meta("regime") + " does not match training data regime " +
                std::string(PpgKindName(data.regime)));
  Trainer t(LoadArchitecture(c), data, h, c.seed);
  c.LoadParams(t.model_.params(), "param.");
  c.LoadParams(t.best_.params(), "best.");
  const ParamStore& p = t.model_.params();
  for (int i = 0; i < p.size(); ++i) {
    const Matrix& v = c.Tensor("velocity." + p.name(i));
    if (v.rows() != p.value(i).rows() || v.cols() != p.value(i).cols())
      throw Error("checkpoint velocity shape mismatch for " + p.name(i));
    t.momentum_.velocity[i] = v;
  }
  t.epoch_ = ParseInt(c.Meta("state.epoch"));
  t.best_epoch_ = ParseInt(c.Meta("state.best_epoch"));
  t.best_valid_ = ParseDouble(c.Meta("state.best_valid"));
  t.epochs_since_best_ = ParseInt(c.Meta("state.epochs_since_best"));
  t.reached_target_ = c.Meta("state.reached_target") == "1";
  if (const Matrix* hist = c.FindTensor("history")) {
    for (int i = 0; i < hist->rows(); ++i) {
      EpochRecord r;
      r.epoch = static_cast<int>((*hist)(i, 0));
      r.train_mse = {(*hist)(i, 1), (*hist)(i, 2)};
      r.valid_mse = {(*hist)(i, 3), (*hist)(i, 4)};
      t.history_.push_back(r);
    }
  }
  t.config_hash_ = c.config_hash;
  return t;
}

void WriteHistoryTable(const fs::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch\ttrain_mse_A\ttrain_mse_B\tvalid_mse_A\tvalid_mse_B\tvalid_mse_mean\n";
  for (const auto& r : history)
    out << r.epoch << '\t' << Str(r.train_mse[0]) << '\t' << Str(r.train_mse[1]) << '\t' << Str(r.valid_mse[0])
        << '\t' << Str(r.valid_mse[1]) << '\t' << Str(r.mean_valid()) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

Matrix TrainedModel::Predict(const Matrix& raw_input, LanguageId lang) const {
  return output_stats.Invert(network.Forward(input_stats.Apply(raw_input), lang));
}

TrainedModel TrainedModelFromCheckpoint(const Checkpoint& c) {
  TrainedModel m(LoadArchitecture(c));
  c.LoadParams(m.network.params(), "best.");
  m.input_stats = LoadStandardizer(c, "input");
  m.output_stats = LoadStandardizer(c, "output");
  m.regime = ParsePpgKind(c.Meta("regime"));
  m.embedding.mode = ParseEmbeddingMode(c.Meta("embedding.mode"));
  m.embedding.dim = ParseInt(c.Meta("embedding.dim"));
  m.embedding.seed = std::stoull(c.Meta("embedding.seed"));
  m.mcc_dim = ParseInt(c.Meta("mcc_dim"));
  m.manifest_path = c.Meta("manifest");
  m.checkpoint_hash = c.config_hash;
  return m;
}

TrainedModel LoadTrainedModel(const fs::path& path) {
  const Checkpoint c = ReadCheckpoint(path);
  TrainedModel m = TrainedModelFromCheckpoint(c);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  m.checkpoint_hash = HexDigest(Fnv1a64(bytes));
  return m;
}

}  // namespace xlvc
