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

#include "xlvc/netcore/param_store.h"

namespace xlvc {

int ParamStore::Add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw Error("ParamStore: duplicate tensor '" + name + "'");
  if (rows < 1 || cols < 1) throw Error("ParamStore: empty tensor '" + name + "'");
  const int i = size();
  names_.push_back(name);
  values_.push_back(Matrix::Zero(rows, cols));
  grads_.push_back(Matrix::Zero(rows, cols));
  index_.emplace(name, i);
  return i;
}

int ParamStore::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int ParamStore::IndexOf(const std::string& name) const {
  const int i = Find(name);
  if (i < 0) throw Error("ParamStore: no tensor named '" + name + "'");
  return i;
}

GradientList ParamStore::ZeroGradients() const {
  GradientList g;
  g.reserve(values_.size());
  for (const auto& v : values_) g.push_back(Matrix::Zero(v.rows(), v.cols()));
  return g;
}

void ParamStore::ZeroGrad() {
  for (auto& g : grads_) g.setZero();
}

long long ParamStore::ParameterCount() const {
  long long n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParamStore::AllFinite() const {
  for (const auto& v : values_)
    if (!v.allFinite()) return false;
  return true;
}

void ParamStore::CopyValuesFrom(const ParamStore& other) {
  for (int i = 0; i < size(); ++i) {
    const Matrix& src = other.value(names_[i]);
    if (src.rows() != values_[i].rows() || src.cols() != values_[i].cols())
      throw Error("ParamStore: shape mismatch for '" + names_[i] + "'");
    values_[i] = src;
  }
}

}  // namespace xlvc
