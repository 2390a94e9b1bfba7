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

#include "xlvc/netcore/optimizer.h"

#include <cmath>

namespace xlvc {

StepStats SgdMomentumStep(ParamStore& params, MomentumState& state, const SgdMomentumOptions& options) {
  if (static_cast<int>(state.velocity.size()) != params.size()) state = MomentumState::For(params);
  double sq = 0.0;
  for (int i = 0; i < params.size(); ++i) {
    if (!params.grad(i).allFinite())
      throw NonFiniteGradientError("non-finite gradient in '" + params.name(i) + "'");
    sq += params.grad(i).squaredNorm();
  }
  StepStats stats;
  stats.grad_norm = std::sqrt(sq);
  if (!std::isfinite(stats.grad_norm)) throw NonFiniteGradientError("gradient norm overflow");
  if (options.clip_norm > 0.0 && stats.grad_norm > options.clip_norm)
    stats.clip_scale = options.clip_norm / stats.grad_norm;

  for (int i = 0; i < params.size(); ++i) {
    Matrix& v = state.velocity[i];
    v = options.momentum * v - (options.lr * stats.clip_scale) * params.grad(i);
    params.value(i) += v;
  }
  params.ZeroGrad();
  return stats;
}

}  // namespace xlvc
