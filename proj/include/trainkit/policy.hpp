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

#include <array>
#include <string>
#include <vector>

namespace trainkit {

enum class OpKind {
  kShearX,
  kShearY,
  kTranslateX,
  kTranslateY,
  kRotate,
  kColor,
  kPosterize,
  kSolarize,
  kContrast,
  kSharpness,
  kBrightness,
  kAutoContrast,
  kEqualize,
  kInvert,
};

inline constexpr int kNumOpKinds = 14;

const char* op_kind_name(OpKind kind);
OpKind op_kind_from_name(const std::string& name);  // throws on unknown name

/// Legal magnitude range for an op; magnitudes are stored as absolute values
/// (shear factor, degrees, solarize threshold, ...), not policy levels.
struct MagnitudeRange {
  double lo = 0.0;
  double hi = 0.0;
};
MagnitudeRange op_magnitude_range(OpKind kind);

struct OpSlot {
  OpKind kind = OpKind::kInvert;
  double prob = 0.0;
  double magnitude = 0.0;
};

/// A sub-policy is two op slots applied in order, each with its own
/// application probability.
struct SubPolicy {
  std::array<OpSlot, 2> slots;
};

inline constexpr int kPolicyTableSize = 24;

struct PolicyTable {
  std::vector<SubPolicy> subs;
  void validate() const;  // exactly 24 entries, probs and magnitudes in range
};

/// Loads a policy table from a JSON file: an array of 24 entries, each an
/// array of two {"op": name, "prob": p, "magnitude": m} records.
PolicyTable load_policy_table(const std::string& path);

}  // namespace trainkit
