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

#ifndef XLVC_NETCORE_SEQUENCE_NET_H_
#define XLVC_NETCORE_SEQUENCE_NET_H_

#include <random>
#include <string>
#include <vector>

#include "xlvc/netcore/param_store.h"

namespace xlvc {

enum class LayerKind { kLinear, kRelu, kLstmForward, kLstmBackward, kBlstm };

std::string_view LayerKindName(LayerKind kind);

// For kBlstm, out_dim is the concatenated width; each direction has out_dim / 2
// units. kRelu requires in_dim == out_dim.
struct LayerSpec {
  LayerKind kind = LayerKind::kLinear;
  int in_dim = 0;
  int out_dim = 0;
  std::string name;
};

// Activations recorded by one LSTM direction, indexed by absolute frame.
struct LstmCache {
  Matrix input;      // T x in
  Matrix gates;      // T x 4H, activated [i | f | g | o]
  Matrix cell;       // T x H
  Matrix tanh_cell;  // T x H
  Matrix hidden;     // T x H
};

struct LayerTape {
  Matrix input;  // linear and relu
  LstmCache dir[2];
};

class Tape {
 public:
  int frames() const { return frames_; }

 private:
  friend class LayerStack;
  int frames_ = 0;
  std::vector<LayerSpec> specs_;
  std::vector<LayerTape> layers_;
};

// A chain of layers whose parameters live in a ParamStore under
// "<prefix>.<layer name>.<tensor>".
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(std::string prefix, std::vector<LayerSpec> specs);

  void Register(ParamStore& params);
  void Bind(const ParamStore& params);

  // Uniform +-sqrt(6 / (fan_in + fan_out)) weights (per gate for LSTMs), zero
  // biases except +1 on LSTM forget gates.
  void Initialize(ParamStore& params, std::mt19937_64& rng) const;

  // input: T x in_dim. Records activations into `tape` when non-null.
  Matrix Forward(const ParamStore& params, const Matrix& input, Tape* tape = nullptr) const;

  // Accumulates (+=) parameter gradients into `grads` (aligned with `params`)
  // and returns the gradient with respect to the input.
  Matrix Backward(const ParamStore& params, const Tape& tape, const Matrix& output_grad,
                  GradientList& grads) const;
  Matrix Backward(ParamStore& params, const Tape& tape, const Matrix& output_grad) const {
    return Backward(params, tape, output_grad, params.grads());
  }

  int in_dim() const { return specs_.empty() ? 0 : specs_.front().in_dim; }
  int out_dim() const { return specs_.empty() ? 0 : specs_.back().out_dim; }
  const std::string& prefix() const { return prefix_; }
  const std::vector<LayerSpec>& specs() const { return specs_; }
  // Indices into the bound ParamStore of every tensor this stack owns.
  std::vector<int> TensorIndices() const;
  std::string TensorName(int layer, const std::string& suffix) const;

 private:
  struct Slots {
    int w = -1, b = -1;             // linear
    int wx[2] = {-1, -1}, wh[2] = {-1, -1}, bias[2] = {-1, -1};  // lstm directions
  };
  void Resolve(const ParamStore& params, ParamStore* registering);

  std::string prefix_;
  std::vector<LayerSpec> specs_;
  std::vector<Slots> slots_;
};

}  // namespace xlvc

#endif  // XLVC_NETCORE_SEQUENCE_NET_H_
