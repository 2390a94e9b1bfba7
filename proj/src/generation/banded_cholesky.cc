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

#include "xlvc/generation/banded_cholesky.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace xlvc {

BandedSpdMatrix::BandedSpdMatrix(int n, int bandwidth)
    : n_(n), p_(bandwidth), band_(static_cast<std::size_t>(n) * (bandwidth + 1), 0.0) {
  if (n < 1 || bandwidth < 0) throw Error("BandedSpdMatrix: bad shape");
}

void BandedSpdMatrix::Add(int i, int j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > p_) throw Error("BandedSpdMatrix::Add outside band");
  band_[static_cast<std::size_t>(i) * (p_ + 1) + (i - j)] += v;
}

double BandedSpdMatrix::At(int i, int j) const {
  if (i < j) std::swap(i, j);
  if (i - j > p_) return 0.0;
  return band_[static_cast<std::size_t>(i) * (p_ + 1) + (i - j)];
}

Matrix BandedSpdMatrix::ToDense() const {
  Matrix a = Matrix::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = std::max(0, i - p_); j <= i; ++j) a(i, j) = a(j, i) = At(i, j);
  return a;
}

BandedCholesky::BandedCholesky(BandedSpdMatrix a) : n_(a.n_), p_(a.p_), l_(std::move(a.band_)) {
  const int w = p_ + 1;
  auto L = [&](int i, int j) -> double& { return l_[static_cast<std::size_t>(i) * w + (i - j)]; };
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - p_);
    for (int j = j0; j < i; ++j) {
      double s = L(i, j);
      for (int k = std::max(j0, j - p_); k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
    double d = L(i, i);
    for (int k = j0; k < i; ++k) d -= L(i, k) * L(i, k);
    if (!(d > 0.0)) throw Error("BandedCholesky: matrix not positive definite at row " + std::to_string(i));
    L(i, i) = std::sqrt(d);
  }
}

Vector BandedCholesky::Solve(const Vector& b) const {
  if (b.size() != n_) throw Error("BandedCholesky::Solve: size mismatch");
  const int w = p_ + 1;
  auto L = [&](int i, int j) { return l_[static_cast<std::size_t>(i) * w + (i - j)]; };
  Vector y(n_);
  for (int i = 0; i < n_; ++i) {
    double s = b(i);
    for (int k = std::max(0, i - p_); k < i; ++k) s -= L(i, k) * y(k);
    y(i) = s / L(i, i);
  }
  Vector x(n_);
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y(i);
    for (int k = i + 1; k <= std::min(n_ - 1, i + p_); ++k) s -= L(k, i) * x(k);
    x(i) = s / L(i, i);
  }
  return x;
}

}  // namespace xlvc
