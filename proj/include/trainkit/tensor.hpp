// Copyright 2026 The trainkit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace trainkit {

/// Dense row-major tensor. Deliberately minimal: flat storage plus a shape,
/// with 2-d accessors for the matrix-shaped data the losses pass around.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), T(0)) {}
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != count(shape))
      throw std::invalid_argument("tensor: data size does not match shape");
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T& at(int i, int j) { return data[static_cast<std::size_t>(i) * dim(1) + j]; }
  const T& at(int i, int j) const { return data[static_cast<std::size_t>(i) * dim(1) + j]; }

  const T* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim(1); }
  T* row(int i) { return data.data() + static_cast<std::size_t>(i) * dim(1); }
};

/// A parameter tensor with a stable name used by the optimizer, the
/// checkpoint format and the gradient audits.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

/// Non-owning handle to a live parameter; the unit the optimizer and the
/// checkpoint loader operate on. Lets the arcface head weight join the
/// model's own parameters in one list.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* tensor = nullptr;
};

}  // namespace trainkit
