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
#include <string_view>

namespace trainkit {

/// Deterministic random stream keyed by (seed, stream id). Two streams with
/// the same key always yield the same draw sequence, independent of platform
/// or standard-library version, so every sample/epoch can own its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform in [0, 1), 53-bit resolution.
  double next_double();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n == 0 returns 0 without consuming a draw.
  std::uint32_t next_below(std::uint32_t n);
  bool bernoulli(double p);
  /// Beta(a, b) via Johnk's method in log space (exact uniform for a==b==1).
  double beta(double a, double b);

  std::uint64_t draw_count() const { return draws_; }

 private:
  std::uint64_t state_;
  std::uint64_t draws_ = 0;
};

/// 64-bit FNV-1a, used for config digests and derived stream ids.
std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t fnv1a(std::string_view s);

/// Order-sensitive combiner for building stream ids out of small tuples,
/// e.g. (epoch, sample index) or (image id, scale).
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

}  // namespace trainkit
