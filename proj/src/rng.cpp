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

#include "trainkit/rng.hpp"

#include <algorithm>
#include <cmath>

namespace trainkit {
namespace {

// Stafford mix13 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : state_(mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ stream_id)) {}

std::uint64_t RngStream::next_u64() {
  // splitmix64
  ++draws_;
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

std::uint32_t RngStream::next_below(std::uint32_t n) {
  if (n == 0) return 0;
  return static_cast<std::uint32_t>(next_u64() % n);
}

bool RngStream::bernoulli(double p) { return next_double() < p; }

double RngStream::beta(double a, double b) {
  if (a == 1.0 && b == 1.0) return next_double();
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double u = next_double();
    const double v = next_double();
    if (u <= 0.0 || v <= 0.0) continue;
    const double lx = std::log(u) / a;
    const double ly = std::log(v) / b;
    const double m = std::max(lx, ly);
    const double lsum = m + std::log(std::exp(lx - m) + std::exp(ly - m));
    if (lsum <= 0.0) return std::exp(lx - lsum);  // accept when x + y <= 1
  }
  return 0.5;
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a + 0x9e3779b97f4a7c15ULL + (b << 1)) ^ (b >> 1);
}

}  // namespace trainkit
