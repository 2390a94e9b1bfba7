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

#ifndef XLVC_MODNET_TRAINING_H_
#define XLVC_MODNET_TRAINING_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xlvc/features/manifest.h"
#include "xlvc/modnet/modular_network.h"
#include "xlvc/netcore/checkpoint.h"
#include "xlvc/netcore/optimizer.h"
#include "xlvc/synthcorpus/speaker_embedding.h"

namespace xlvc {

// Per-dimension affine normalization. Variances are floored at 1e-8.
struct Standardizer {
  Vector mean;
  Vector stddev;

  static Standardizer Fit(const std::vector<const Matrix*>& sequences);
  Matrix Apply(const Matrix& x) const;
  Matrix Invert(const Matrix& z) const;
  Vector Variance() const { return stddev.cwiseProduct(stddev); }
};

struct EmbeddingSettings {
  EmbeddingMode mode = EmbeddingMode::kSynthetic;
  int dim = 16;
  uint64_t seed = 1;
};

struct SequenceExample {
  std::string utterance_id;
  std::string speaker_id;
  LanguageId language = LanguageId::kA;
  Matrix input;   // standardized [ppg | embedding]
  Matrix target;  // standardized acoustic frames
};

struct TrainingData {
  std::filesystem::path manifest_path;
  PpgKind regime = PpgKind::kMixedLingual;
  EmbeddingSettings embedding;
  int mcc_dim = 0;
  Standardizer input_stats;
  Standardizer output_stats;
  std::vector<SequenceExample> train;
  std::vector<SequenceExample> valid;

  int input_dim() const { return static_cast<int>(input_stats.mean.size()); }
  int output_dim() const { return static_cast<int>(output_stats.mean.size()); }
};

// Loads train and validation records of `manifest_path`; statistics come from
// the training split only.
TrainingData LoadTrainingData(const std::filesystem::path& manifest_path, const EmbeddingSettings& embedding,
                              int threads = 1);

struct Batch {
  LanguageId language = LanguageId::kA;
  std::vector<int> items;  // indices into the sequence list
};

// Shuffles within each language (keyed by seed and epoch), cuts homogeneous
// batches of up to batch_sequences, and interleaves the two languages in
// proportion to their batch counts.
std::vector<Batch> ScheduleBatches(const std::vector<LanguageId>& languages, int batch_sequences, uint64_t seed,
                                   int epoch);

struct NamedBatch {
  LanguageId language = LanguageId::kA;
  std::vector<std::string> utterance_ids;
};
std::vector<NamedBatch> ScheduleManifestBatches(const Manifest& manifest, int batch_sequences, uint64_t seed,
                                                int epoch);

struct TrainHyper {
  double lr = 0.002;
  double momentum = 0.9;
  double clip_norm = 100.0;
  int batch_sequences = 25;
  int max_epochs = 200;
  int patience = 10;
  // Stop as soon as the mean validation MSE drops below this (0 disables).
  double target_validation_mse = 0.0;
  // Scaling of the squared error that is differentiated:
  //   mean      mean over the batch's frames and output dimensions
  //   frame     sum over dimensions, mean over the batch's frames
  //   sequence  sum over dimensions and sequences, mean over each
  //             sequence's frames
  std::string loss_reduction = "sequence";
  int threads = 1;

  void Bind(ConfigSchema& schema, const std::string& prefix);
  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  std::array<double, 2> train_mse = {0.0, 0.0};
  std::array<double, 2> valid_mse = {0.0, 0.0};

  double mean_valid() const { return 0.5 * (valid_mse[0] + valid_mse[1]); }
};

class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

class Trainer {
 public:
  Trainer(const ArchitectureConfig& arch, const TrainingData& data, const TrainHyper& hyper, uint64_t seed);

  // Accumulates gradients of the configured loss into the model's
  // ParamStore and returns the batch MSE in standardized units (mean over
  // frames and output dimensions).
  double AccumulateBatch(const Batch& batch);

  EpochRecord RunEpoch();
  bool Finished() const;
  void Train(const std::function<void(const EpochRecord&)>& on_epoch = {});

  // Mean over frames and dimensions of the standardized squared error.
  double Evaluate(const ModularNetwork& model, const std::vector<SequenceExample>& set, LanguageId lang) const;

  const ModularNetwork& model() const { return model_; }
  ModularNetwork& mutable_model() { return model_; }
  const ModularNetwork& best_model() const { return best_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  int epoch() const { return epoch_; }
  int best_epoch() const { return best_epoch_; }
  double best_valid() const { return best_valid_; }
  const TrainingData& data() const { return *data_; }
  const TrainHyper& hyper() const { return hyper_; }
  uint64_t seed() const { return seed_; }

  void set_config_hash(std::string h) { config_hash_ = std::move(h); }
  // Raises or lowers the epoch limit of a resumed run.
  void set_max_epochs(int n) { hyper_.max_epochs = n; }

  Checkpoint ToCheckpoint() const;
  static Trainer FromCheckpoint(const Checkpoint& ckpt, const TrainingData& data);

 private:
  ArchitectureConfig arch_;
  const TrainingData* data_;
  TrainHyper hyper_;
  uint64_t seed_;
  std::string config_hash_;
  ModularNetwork model_;
  ModularNetwork best_;
  MomentumState momentum_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_valid_ = 0.0;
  int epochs_since_best_ = 0;
  bool reached_target_ = false;
  std::vector<EpochRecord> history_;
};

void WriteHistoryTable(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// Everything needed at conversion time: the best parameters and the
// normalization statistics.
struct TrainedModel {
  explicit TrainedModel(const ArchitectureConfig& arch) : network(arch) {}

  ModularNetwork network;
  Standardizer input_stats;
  Standardizer output_stats;
  PpgKind regime = PpgKind::kMixedLingual;
  EmbeddingSettings embedding;
  int mcc_dim = 0;
  std::filesystem::path manifest_path;
  std::string checkpoint_hash;

  // De-standardized acoustic prediction for one input sequence (already
  // concatenated with the embedding, not yet standardized).
  Matrix Predict(const Matrix& raw_input, LanguageId lang) const;
};

TrainedModel LoadTrainedModel(const std::filesystem::path& checkpoint_path);
TrainedModel TrainedModelFromCheckpoint(const Checkpoint& ckpt);

}  // namespace xlvc

#endif  // XLVC_MODNET_TRAINING_H_
