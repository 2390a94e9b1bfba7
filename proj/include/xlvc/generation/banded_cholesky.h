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

#ifndef XLVC_GENERATION_BANDED_CHOLESKY_H_
#define XLVC_GENERATION_BANDED_CHOLESKY_H_

#include <vector>

#include "xlvc/common.h"

namespace xlvc {

// Symmetric positive-definite matrix with `bandwidth` sub-diagonals, stored
// as lower band rows: band(i, k) = A(i, i - k) for k = 0..bandwidth.
class BandedSpdMatrix {
 public:
  BandedSpdMatrix(int n, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return p_; }

  // Adds v to A(i, j) (and its mirror). |i - j| must not exceed the bandwidth.
  void Add(int i, int j, double v);
  double At(int i, int j) const;

  Matrix ToDense() const;

 private:
  friend class BandedCholesky;
  int n_;
  int p_;
  std::vector<double> band_;  // n * (p + 1)
};

// In-place L L^T factorization, O(n p^2). Throws if a pivot is not positive.
class BandedCholesky {
 public:
  explicit BandedCholesky(BandedSpdMatrix a);

  Vector Solve(const Vector& b) const;

 private:
  int n_;
  int p_;
  std::vector<double> l_;  // same packing as BandedSpdMatrix
};

}  // namespace xlvc

#endif  // XLVC_GENERATION_BANDED_CHOLESKY_H_
