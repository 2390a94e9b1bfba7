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

#ifndef XLVC_GENERATION_PARAMETER_GENERATION_H_
#define XLVC_GENERATION_PARAMETER_GENERATION_H_

#include <array>

#include "xlvc/common.h"

namespace xlvc {

// Static, delta and delta-delta windows over frames t-1, t, t+1. Frames past
// either end are replaced by the nearest edge frame.
struct DeltaWindows {
  static constexpr std::array<double, 3> kStatic = {0.0, 1.0, 0.0};
  static constexpr std::array<double, 3> kDelta = {-0.5, 0.0, 0.5};
  static constexpr std::array<double, 3> kDelta2 = {1.0, -2.0, 1.0};
  static constexpr std::array<std::array<double, 3>, 3> kAll = {kStatic, kDelta, kDelta2};
};

// T x D statics -> T x 3D [static | delta | delta-delta].
Matrix ApplyDeltas(const Matrix& statics);

inline constexpr double kVarianceFloor = 1e-8;

// Per-dimension variances for a [static | delta | delta-delta] block of width
// 3D. Entries are floored at kVarianceFloor; +inf is allowed and means the
// corresponding stream carries no weight.
struct GlobalVariances {
  Vector values;

  static GlobalVariances Floored(Vector raw);
  int static_dim() const { return static_cast<int>(values.size() / 3); }
};

// Maximum-likelihood trajectory: per dimension solves
// (W' P W) c = W' P mu with P the diagonal precision, via banded Cholesky.
Matrix Mlpg(const Matrix& means, const GlobalVariances& variances);

// Scales cepstral coefficients with index >= 2 by beta.
Matrix CepstralPostfilter(const Matrix& mcc, double beta = 1.4);

inline constexpr double kF0StdFloor = 1e-6;

struct F0Stats {
  double mean_log_f0 = 0.0;
  double std_log_f0 = 1.0;
  int frames_counted = 0;
};

// Mean and population standard deviation over frames with vuv >= 0.5.
// Throws if no frame is voiced.
F0Stats ComputeF0Stats(const Vector& log_f0, const Vector& vuv);

// Affine log-domain mapping on voiced frames; unvoiced frames are copied.
Vector ConvertF0(const Vector& log_f0, const Vector& vuv, const F0Stats& src, const F0Stats& tgt);

}  // namespace xlvc

#endif  // XLVC_GENERATION_PARAMETER_GENERATION_H_
