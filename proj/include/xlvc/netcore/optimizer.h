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

#ifndef XLVC_NETCORE_OPTIMIZER_H_
#define XLVC_NETCORE_OPTIMIZER_H_

#include "xlvc/netcore/param_store.h"

namespace xlvc {

struct SgdMomentumOptions {
  double lr = 0.002;
  double momentum = 0.9;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

struct MomentumState {
  GradientList velocity;

  static MomentumState For(const ParamStore& params) { return MomentumState{params.ZeroGradients()}; }
};

struct StepStats {
  double grad_norm = 0.0;
  double clip_scale = 1.0;
};

class NonFiniteGradientError : public Error {
 public:
  using Error::Error;
};

// Clip by global L2 norm, then v <- momentum v - lr g, theta <- theta + v,
// and zero the gradients. Non-finite gradients abort before any update.
StepStats SgdMomentumStep(ParamStore& params, MomentumState& state, const SgdMomentumOptions& options);

}  // namespace xlvc

#endif  // XLVC_NETCORE_OPTIMIZER_H_
