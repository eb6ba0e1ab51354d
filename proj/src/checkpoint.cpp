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

#include "trainkit/checkpoint.hpp"

#include <fstream>

namespace trainkit {
namespace {

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in, const char* what) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

}  // namespace

const RawTensor* CheckpointData::find(const std::string& name) const {
  for (const RawTensor& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void write_checkpoint(const std::string& path, const CheckpointData& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ckpt.config_digest);
  put<std::uint32_t>(out, ckpt.epoch);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const RawTensor& t : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.bytes.data()),
              static_cast<std::streamsize>(t.bytes.size()));
  }
  if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: " + path + " has unsupported version " +
                             std::to_string(version));
  CheckpointData ckpt;
  ckpt.config_digest = get<std::uint64_t>(in, "config digest");
  ckpt.epoch = get<std::uint32_t>(in, "epoch");
  const auto count = get<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    RawTensor t;
    const auto name_len = get<std::uint32_t>(in, "name length");
    if (name_len > 4096) throw std::runtime_error("checkpoint: implausible tensor name length");
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    if (!in) throw std::runtime_error("checkpoint: truncated tensor name");
    const auto dtype = get<std::uint8_t>(in, "dtype");
    if (dtype > 1) throw std::runtime_error("checkpoint: unknown dtype for " + t.name);
    t.dtype = static_cast<Dtype>(dtype);
    const auto ndim = get<std::uint8_t>(in, "rank");
    std::int64_t elems = 1;
    for (int d = 0; d < ndim; ++d) {
      const auto dim = get<std::uint32_t>(in, "dimension");
      t.shape.push_back(static_cast<int>(dim));
      elems *= dim;
    }
    const std::size_t elem_size = (t.dtype == Dtype::kF32) ? 4 : 8;
    t.bytes.resize(static_cast<std::size_t>(elems) * elem_size);
    in.read(reinterpret_cast<char*>(t.bytes.data()),
            static_cast<std::streamsize>(t.bytes.size()));
    if (!in) throw std::runtime_error("checkpoint: truncated data for " + t.name);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace trainkit
