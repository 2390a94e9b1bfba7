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

#ifndef XLVC_MODNET_MODULAR_NETWORK_H_
#define XLVC_MODNET_MODULAR_NETWORK_H_

#include <string>
#include <vector>

#include "xlvc/config.h"
#include "xlvc/features/types.h"
#include "xlvc/netcore/gradient_check.h"
#include "xlvc/netcore/sequence_net.h"

namespace xlvc {

// LI: one output head shared by both languages. LS: one head per language.
enum class Variant { kLI, kLS };

std::string_view VariantName(Variant v);  // "li" / "ls"
Variant ParseVariant(std::string_view name);

struct ArchitectureConfig {
  Variant variant = Variant::kLS;
  int input_dim = 0;
  int output_dim = 0;
  int projection_width = 64;  // ReLU projection
  int blstm_width = 32;       // units per direction, two layers
  int head_width = 32;        // ReLU layer of each head

  void BindWidths(ConfigSchema& schema, const std::string& prefix);
  void Validate() const;
};

long long CountParameters(const ArchitectureConfig& arch);

// LI configuration with widened trunk whose parameter count is as close as
// possible to `ls` (searched over projection and BLSTM widths).
ArchitectureConfig MatchParameterBudget(const ArchitectureConfig& ls);

// Shared trunk S (linear+ReLU projection, two BLSTMs) followed by the head
// selected by language. Parameter names: "trunk.*", "head.A.*", "head.B.*"
// for LS, "head.shared.*" for LI.
class ModularNetwork {
 public:
  explicit ModularNetwork(const ArchitectureConfig& arch);

  const ArchitectureConfig& arch() const { return arch_; }
  int num_heads() const { return static_cast<int>(heads_.size()); }
  int HeadFor(LanguageId lang) const;
  std::string HeadName(int head) const;

  // Random init of all layers; when zero_output is set the final linear layer
  // of each head starts at zero so an untrained model predicts zeros.
  void Initialize(uint64_t seed, bool zero_output = true);

  struct ForwardTape {
    Tape trunk;
    Tape head;
    int head_index = -1;
  };

  Matrix Forward(const Matrix& input, LanguageId lang, ForwardTape* tape = nullptr) const;
  // Only the trunk and the head recorded in `tape` receive gradient.
  Matrix Backward(const ForwardTape& tape, const Matrix& output_grad, GradientList& grads) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const LayerStack& trunk() const { return trunk_; }
  const LayerStack& head(int i) const { return heads_[i]; }

 private:
  ArchitectureConfig arch_;
  ParamStore params_;
  LayerStack trunk_;
  std::vector<LayerStack> heads_;
};

// Small architectures for finite-difference checking: "ls" and "li" use
// width 8 everywhere with 10 inputs and 13 outputs.
ArchitectureConfig GradCheckPreset(std::string_view name);

// Checks d(MSE)/d(theta) of `arch` on a random T-frame input and target
// routed through the head of `lang`. All layers, including the output layer,
// get random values.
GradCheckResult CheckModularGradients(const ArchitectureConfig& arch, int frames, LanguageId lang, uint64_t seed,
                                      const GradCheckOptions& options = {});

}  // namespace xlvc

#endif  // XLVC_MODNET_MODULAR_NETWORK_H_
