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

#include "xlvc/modnet/modular_network.h"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "xlvc/rng.h"

namespace xlvc {

namespace {

LayerStack MakeTrunk(const ArchitectureConfig& a) {
  const int p = a.projection_width, h2 = 2 * a.blstm_width;
  return LayerStack("trunk", {{LayerKind::kLinear, a.input_dim, p, "proj"},
                              {LayerKind::kRelu, p, p, "proj_relu"},
                              {LayerKind::kBlstm, p, h2, "blstm1"},
                              {LayerKind::kBlstm, h2, h2, "blstm2"}});
}

LayerStack MakeHead(const ArchitectureConfig& a, const std::string& name) {
  const int r = a.head_width;
  return LayerStack("head." + name, {{LayerKind::kLinear, 2 * a.blstm_width, r, "hidden"},
                                     {LayerKind::kRelu, r, r, "relu"},
                                     {LayerKind::kLinear, r, a.output_dim, "out"}});
}

}  // namespace

std::string_view VariantName(Variant v) { return v == Variant::kLI ? "li" : "ls"; }

Variant ParseVariant(std::string_view name) {
  if (name == "li" || name == "LI") return Variant::kLI;
  if (name == "ls" || name == "LS") return Variant::kLS;
  throw Error("unknown variant '" + std::string(name) + "' (expected li or ls)");
}

void ArchitectureConfig::BindWidths(ConfigSchema& s, const std::string& p) {
  s.Bind(p + "projection_width", &projection_width, "trunk ReLU projection width");
  s.Bind(p + "blstm_width", &blstm_width, "trunk BLSTM units per direction (two layers)");
  s.Bind(p + "head_width", &head_width, "ReLU width of each output head");
}

void ArchitectureConfig::Validate() const {
  if (input_dim < 1 || output_dim < 1 || projection_width < 1 || blstm_width < 1 || head_width < 1)
    throw ConfigError("architecture widths must be positive");
}

long long CountParameters(const ArchitectureConfig& a) {
  auto lstm = [](long long in, long long h) { return 4 * h * (in + h) + 4 * h; };
  const long long p = a.projection_width, h = a.blstm_width, r = a.head_width;
  const long long trunk = (a.input_dim + 1) * p + 2 * lstm(p, h) + 2 * lstm(2 * h, h);
  const long long head = (2 * h + 1) * r + (r + 1) * a.output_dim;
  return trunk + (a.variant == Variant::kLS ? 2 : 1) * head;
}

ArchitectureConfig MatchParameterBudget(const ArchitectureConfig& ls) {
  ArchitectureConfig ref = ls;
  ref.variant = Variant::kLS;
  const long long target = CountParameters(ref);
  ArchitectureConfig best = ls;
  best.variant = Variant::kLI;
  long long best_gap = std::numeric_limits<long long>::max();
  for (int h = ls.blstm_width; h <= 2 * ls.blstm_width; ++h)
    for (int p = ls.projection_width; p <= 4 * ls.projection_width; ++p) {
      ArchitectureConfig c = best;
      c.blstm_width = h;
      c.projection_width = p;
      const long long gap = std::llabs(CountParameters(c) - target);
      if (gap < best_gap) {
        best_gap = gap;
        best.blstm_width = h;
        best.projection_width = p;
      }
    }
  return best;
}

ModularNetwork::ModularNetwork(const ArchitectureConfig& arch) : arch_(arch) {
  arch_.Validate();
  trunk_ = MakeTrunk(arch_);
  trunk_.Register(params_);
  if (arch_.variant == Variant::kLS) {
    heads_.push_back(MakeHead(arch_, "A"));
    heads_.push_back(MakeHead(arch_, "B"));
  } else {
    heads_.push_back(MakeHead(arch_, "shared"));
  }
  for (auto& h : heads_) h.Register(params_);
}

int ModularNetwork::HeadFor(LanguageId lang) const {
  if (lang != LanguageId::kA && lang != LanguageId::kB) throw Error("ModularNetwork: unknown language");
  return arch_.variant == Variant::kLS ? static_cast<int>(lang) : 0;
}

std::string ModularNetwork::HeadName(int head) const { return heads_.at(head).prefix(); }

void ModularNetwork::Initialize(uint64_t seed, bool zero_output) {
  auto rng = MakeStream(seed, 0x696e6974ULL);
  trunk_.Initialize(params_, rng);
  for (auto& h : heads_) {
    h.Initialize(params_, rng);
    if (zero_output) {
      params_.value(h.TensorName(2, "W")).setZero();
      params_.value(h.TensorName(2, "b")).setZero();
    }
  }
}

Matrix ModularNetwork::Forward(const Matrix& input, LanguageId lang, ForwardTape* tape) const {
  const int head = HeadFor(lang);
  if (input.cols() != arch_.input_dim)
    throw Error("model input width " + std::to_string(input.cols()) + ", architecture expects " +
                std::to_string(arch_.input_dim));
  const Matrix shared = trunk_.Forward(params_, input, tape ? &tape->trunk : nullptr);
  if (tape) tape->head_index = head;
  return heads_[head].Forward(params_, shared, tape ? &tape->head : nullptr);
}

Matrix ModularNetwork::Backward(const ForwardTape& tape, const Matrix& output_grad, GradientList& grads) const {
  if (tape.head_index < 0 || tape.head_index >= num_heads()) throw Error("ModularNetwork: invalid tape");
  const Matrix d_shared = heads_[tape.head_index].Backward(params_, tape.head, output_grad, grads);
  return trunk_.Backward(params_, tape.trunk, d_shared, grads);
}

ArchitectureConfig GradCheckPreset(std::string_view name) {
  ArchitectureConfig a;
  a.variant = ParseVariant(name);
  a.input_dim = 10;
  a.output_dim = 13;
  a.projection_width = 8;
  a.blstm_width = 8;
  a.head_width = 8;
  return a;
}

GradCheckResult CheckModularGradients(const ArchitectureConfig& arch, int frames, LanguageId lang, uint64_t seed,
                                      const GradCheckOptions& options) {
  if (frames < 1) throw Error("gradient check needs at least one frame");
  ModularNetwork net(arch);
  net.Initialize(seed, false);
  auto rng = MakeStream(seed, 0x6461746121ULL);
  const Matrix input = RandomNormal(rng, frames, arch.input_dim);
  const Matrix target = RandomNormal(rng, frames, arch.output_dim);
  const Matrix baseline = net.Forward(input, lang);
  const Objective objective = [&](GradientList* grads) {
    ModularNetwork::ForwardTape tape;
    const Matrix pred = net.Forward(input, lang, grads ? &tape : nullptr);
    if (!grads) return MseLossDelta(pred, baseline, target);
    Matrix d_pred;
    const double loss = MseLoss(pred, target, &d_pred);
    net.Backward(tape, d_pred, *grads);
    return loss;
  };
  return GradientCheck(net.params(), objective, options);
}

}  // namespace xlvc
