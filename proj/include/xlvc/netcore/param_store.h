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

#ifndef XLVC_NETCORE_PARAM_STORE_H_
#define XLVC_NETCORE_PARAM_STORE_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "xlvc/common.h"

namespace xlvc {

// Gradient slots aligned with the tensors of a ParamStore.
using GradientList = std::vector<Matrix>;

// Named parameter tensors in declaration order, each with a gradient
// accumulator of the same shape.
class ParamStore {
 public:
  // Adds a zero-initialized tensor. Names must be unique.
  int Add(const std::string& name, int rows, int cols);

  int Find(const std::string& name) const;  // -1 if absent
  int IndexOf(const std::string& name) const;  // throws if absent

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  Matrix& value(int i) { return values_[i]; }
  const Matrix& value(int i) const { return values_[i]; }
  Matrix& value(const std::string& n) { return values_[IndexOf(n)]; }
  const Matrix& value(const std::string& n) const { return values_[IndexOf(n)]; }
  Matrix& grad(int i) { return grads_[i]; }
  const Matrix& grad(int i) const { return grads_[i]; }
  Matrix& grad(const std::string& n) { return grads_[IndexOf(n)]; }

  GradientList& grads() { return grads_; }
  const GradientList& grads() const { return grads_; }
  GradientList ZeroGradients() const;

  void ZeroGrad();
  long long ParameterCount() const;
  bool AllFinite() const;

  // Copies values of every tensor present in both stores with equal shape;
  // throws on shape mismatch or a missing name.
  void CopyValuesFrom(const ParamStore& other);

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  GradientList grads_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace xlvc

#endif  // XLVC_NETCORE_PARAM_STORE_H_
