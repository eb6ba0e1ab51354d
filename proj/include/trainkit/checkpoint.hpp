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

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "trainkit/tensor.hpp"

namespace trainkit {

// Versioned binary container: magic, format version, config digest, epoch
// counter, then (name, shape, dtype, raw little-endian data) records.
// Optimizer state is stored as additional tensors under the "opt/" prefix.
inline constexpr char kCheckpointMagic[8] = {'T', 'K', 'C', 'K', 'P', 'T', '.', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Dtype : std::uint8_t { kF32 = 0, kF64 = 1 };

template <typename T>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<float>() {
  return Dtype::kF32;
}
template <>
constexpr Dtype dtype_of<double>() {
  return Dtype::kF64;
}

struct RawTensor {
  std::string name;
  Dtype dtype = Dtype::kF32;
  std::vector<int> shape;
  std::vector<std::byte> bytes;
};

struct CheckpointData {
  std::uint64_t config_digest = 0;
  std::uint32_t epoch = 0;
  std::vector<RawTensor> tensors;

  const RawTensor* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

void write_checkpoint(const std::string& path, const CheckpointData& ckpt);
/// Throws std::runtime_error on bad magic, unsupported version or truncation.
CheckpointData read_checkpoint(const std::string& path);

template <typename T>
RawTensor pack_tensor(const std::string& name, const std::vector<int>& shape,
                      const std::vector<T>& data) {
  RawTensor rt;
  rt.name = name;
  rt.dtype = dtype_of<T>();
  rt.shape = shape;
  rt.bytes.resize(data.size() * sizeof(T));
  std::memcpy(rt.bytes.data(), data.data(), rt.bytes.size());
  return rt;
}

template <typename T>
Tensor<T> unpack_tensor(const RawTensor& rt) {
  if (rt.dtype != dtype_of<T>())
    throw std::runtime_error("checkpoint: tensor " + rt.name + " has a different dtype");
  Tensor<T> t(rt.shape);
  if (rt.bytes.size() != t.data.size() * sizeof(T))
    throw std::runtime_error("checkpoint: tensor " + rt.name + " has inconsistent payload size");
  std::memcpy(t.data.data(), rt.bytes.data(), rt.bytes.size());
  return t;
}

/// Copies checkpoint tensors into the given parameters, matched by name.
/// Every parameter must be present with an identical shape; extra tensors in
/// the checkpoint (e.g. optimizer state) are ignored.
template <typename T>
void load_params(const CheckpointData& ckpt, const std::vector<ParamRef<T>>& params) {
  for (const ParamRef<T>& p : params) {
    const RawTensor* rt = ckpt.find(p.name);
    if (rt == nullptr) throw std::runtime_error("checkpoint: missing tensor " + p.name);
    Tensor<T> t = unpack_tensor<T>(*rt);
    if (t.shape != p.tensor->shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
    *p.tensor = std::move(t);
  }
}

}  // namespace trainkit
