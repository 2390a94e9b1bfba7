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

#include "xlvc/generation/parameter_generation.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xlvc/generation/banded_cholesky.h"

namespace xlvc {

namespace {

// Column taps of window k at frame t after edge replication. Taps landing on
// the same column are merged, so at most three entries are produced.
struct Taps {
  int count = 0;
  std::array<int, 3> col{};
  std::array<double, 3> weight{};
};

Taps WindowTaps(const std::array<double, 3>& w, int t, int frames) {
  Taps taps;
  for (int o = -1; o <= 1; ++o) {
    const double c = w[o + 1];
    if (c == 0.0) continue;
    const int col = std::clamp(t + o, 0, frames - 1);
    int i = 0;
    while (i < taps.count && taps.col[i] != col) ++i;
    if (i == taps.count) {
      taps.col[i] = col;
      taps.weight[i] = 0.0;
      ++taps.count;
    }
    taps.weight[i] += c;
  }
  return taps;
}

}  // namespace

Matrix ApplyDeltas(const Matrix& statics) {
  const int frames = static_cast<int>(statics.rows());
  const int dim = static_cast<int>(statics.cols());
  if (frames < 1) throw Error("ApplyDeltas: empty sequence");
  Matrix out(frames, 3 * dim);
  for (int t = 0; t < frames; ++t) {
    const int prev = std::max(t - 1, 0);
    const int next = std::min(t + 1, frames - 1);
    for (int d = 0; d < dim; ++d) {
      const double a = statics(prev, d), b = statics(t, d), c = statics(next, d);
      out(t, d) = b;
      out(t, dim + d) = DeltaWindows::kDelta[0] * a + DeltaWindows::kDelta[2] * c;
      out(t, 2 * dim + d) = DeltaWindows::kDelta2[0] * a + DeltaWindows::kDelta2[1] * b +
                            DeltaWindows::kDelta2[2] * c;
    }
  }
  return out;
}

GlobalVariances GlobalVariances::Floored(Vector raw) {
  for (auto& v : raw) v = std::max(v, kVarianceFloor);
  return GlobalVariances{std::move(raw)};
}

Matrix Mlpg(const Matrix& means, const GlobalVariances& variances) {
  const int frames = static_cast<int>(means.rows());
  const int dim = variances.static_dim();
  if (frames < 1) throw Error("Mlpg: empty sequence");
  if (means.cols() != 3 * dim || variances.values.size() != 3 * dim)
    throw Error("Mlpg: means width " + std::to_string(means.cols()) + " vs variances " +
                std::to_string(variances.values.size()));

  Matrix out(frames, dim);
  for (int d = 0; d < dim; ++d) {
    BandedSpdMatrix a(frames, 2);
    Vector b = Vector::Zero(frames);
    for (int k = 0; k < 3; ++k) {
      const double var = variances.values(k * dim + d);
      if (!(var >= kVarianceFloor)) throw Error("Mlpg: variance below floor");
      const double precision = std::isinf(var) ? 0.0 : 1.0 / var;
      if (precision == 0.0) continue;
      for (int t = 0; t < frames; ++t) {
        const Taps taps = WindowTaps(DeltaWindows::kAll[k], t, frames);
        const double mu = means(t, k * dim + d);
        for (int i = 0; i < taps.count; ++i) {
          b(taps.col[i]) += precision * taps.weight[i] * mu;
          // One Add per unordered pair; the band stores A(i, j) == A(j, i) once.
          for (int j = 0; j <= i; ++j)
            a.Add(taps.col[i], taps.col[j], precision * taps.weight[i] * taps.weight[j]);
        }
      }
    }
    const Vector c = BandedCholesky(std::move(a)).Solve(b);
    out.col(d) = c;
  }
  return out;
}

Matrix CepstralPostfilter(const Matrix& mcc, double beta) {
  if (beta < 1.0) throw Error("CepstralPostfilter: beta must be >= 1");
  Matrix out = mcc;
  if (out.cols() > 2) out.rightCols(out.cols() - 2) *= beta;
  return out;
}

F0Stats ComputeF0Stats(const Vector& log_f0, const Vector& vuv) {
  if (log_f0.size() != vuv.size()) throw Error("ComputeF0Stats: length mismatch");
  double sum = 0.0;
  int n = 0;
  for (Eigen::Index t = 0; t < log_f0.size(); ++t)
    if (vuv(t) >= 0.5) {
      sum += log_f0(t);
      ++n;
    }
  if (n == 0) throw Error("ComputeF0Stats: no voiced frames");
  const double mean = sum / n;
  double ss = 0.0;
  for (Eigen::Index t = 0; t < log_f0.size(); ++t)
    if (vuv(t) >= 0.5) ss += (log_f0(t) - mean) * (log_f0(t) - mean);
  return F0Stats{mean, std::max(std::sqrt(ss / n), kF0StdFloor), n};
}

Vector ConvertF0(const Vector& log_f0, const Vector& vuv, const F0Stats& src, const F0Stats& tgt) {
  if (log_f0.size() != vuv.size()) throw Error("ConvertF0: length mismatch");
  const double scale = tgt.std_log_f0 / src.std_log_f0;
  Vector out = log_f0;
  for (Eigen::Index t = 0; t < log_f0.size(); ++t)
    if (vuv(t) >= 0.5) out(t) = (log_f0(t) - src.mean_log_f0) * scale + tgt.mean_log_f0;
  return out;
}

}  // namespace xlvc
