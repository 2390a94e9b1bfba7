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

#ifndef XLVC_NETCORE_GRADIENT_CHECK_H_
#define XLVC_NETCORE_GRADIENT_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>

#include "xlvc/netcore/sequence_net.h"

namespace xlvc {

// Mean over all entries of (pred - target)^2. When d_pred is non-null it
// receives dLoss/dpred.
double MseLoss(const Matrix& pred, const Matrix& target, Matrix* d_pred = nullptr);

// MseLoss(pred) - MseLoss(baseline), summed as (p - b)(p + b - 2y) so the
// difference keeps full precision when it is much smaller than the loss.
double MseLossDelta(const Matrix& pred, const Matrix& baseline, const Matrix& target);

// Evaluates the loss at the current parameter values; when `grads` is
// non-null the analytic gradient is accumulated into it. Calls without
// gradients may return the loss shifted by any constant that is the same for
// all of them, since only their differences are used.
using Objective = std::function<double(GradientList* grads)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Networks with more scalars than this are checked on a random subsample.
  long long full_check_limit = 20000;
  int sample_size = 400;
  uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  long long checked = 0;
  std::string worst_tensor;
  long long worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences (L(p + eps) - L(p - eps)) / 2 eps against the analytic
// gradient; error |a - n| / max(1e-8, |a| + |n|). Parameters are restored.
GradCheckResult GradientCheck(ParamStore& params, const Objective& objective, const GradCheckOptions& options = {});

GradCheckResult GradientCheck(const LayerStack& stack, ParamStore& params, const Matrix& input,
                              const Matrix& target, const GradCheckOptions& options = {});

}  // namespace xlvc

#endif  // XLVC_NETCORE_GRADIENT_CHECK_H_
