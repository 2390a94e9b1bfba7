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

#include "xlvc/netcore/gradient_check.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace xlvc {

double MseLoss(const Matrix& pred, const Matrix& target, Matrix* d_pred) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw Error("MseLoss: shape mismatch");
  const double n = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  if (d_pred) *d_pred = (2.0 / n) * diff;
  return diff.squaredNorm() / n;
}

double MseLossDelta(const Matrix& pred, const Matrix& baseline, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || baseline.rows() != target.rows() ||
      baseline.cols() != target.cols())
    throw Error("MseLossDelta: shape mismatch");
  const double n = static_cast<double>(pred.size());
  return ((pred - baseline).array() * (pred + baseline - 2.0 * target).array()).sum() / n;
}

GradCheckResult GradientCheck(ParamStore& params, const Objective& objective, const GradCheckOptions& options) {
  GradientList analytic = params.ZeroGradients();
  const double base = objective(&analytic);
  if (!std::isfinite(base)) throw Error("GradientCheck: non-finite loss");

  std::vector<std::pair<int, long long>> targets;
  const long long total = params.ParameterCount();
  if (total <= options.full_check_limit) {
    for (int i = 0; i < params.size(); ++i)
      for (long long k = 0; k < params.value(i).size(); ++k) targets.emplace_back(i, k);
  } else {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<long long> pick(0, total - 1);
    for (int n = 0; n < std::max(options.sample_size, 200); ++n) {
      long long flat = pick(rng);
      int i = 0;
      while (flat >= params.value(i).size()) flat -= params.value(i).size(), ++i;
      targets.emplace_back(i, flat);
    }
  }

  GradCheckResult result;
  const double eps = options.epsilon;
  for (const auto& [i, k] : targets) {
    double& p = params.value(i).data()[k];
    const double saved = p;
    const double hi = saved + eps, lo = saved - eps;
    p = hi;
    const double plus = objective(nullptr);
    p = lo;
    const double minus = objective(nullptr);
    p = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) throw Error("GradientCheck: non-finite loss");
    const double numeric = (plus - minus) / (hi - lo);
    const double a = analytic[i].data()[k];
    const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    ++result.checked;
    if (err > result.max_relative_error || result.worst_index < 0) {
      result.max_relative_error = std::max(err, result.max_relative_error);
      result.worst_tensor = params.name(i);
      result.worst_index = k;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

GradCheckResult GradientCheck(const LayerStack& stack, ParamStore& params, const Matrix& input,
                              const Matrix& target, const GradCheckOptions& options) {
  Matrix baseline = stack.Forward(params, input);
  Objective objective = [&](GradientList* grads) {
    Tape tape;
    const Matrix out = stack.Forward(params, input, grads ? &tape : nullptr);
    if (!grads) return MseLossDelta(out, baseline, target);
    Matrix d_out;
    const double loss = MseLoss(out, target, &d_out);
    stack.Backward(params, tape, d_out, *grads);
    return loss;
  };
  return GradientCheck(params, objective, options);
}

}  // namespace xlvc
