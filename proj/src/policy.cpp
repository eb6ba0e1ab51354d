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

#include "trainkit/policy.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace trainkit {
namespace {

struct OpInfo {
  const char* name;
  MagnitudeRange range;
};

// Magnitudes are absolute: shear factors, translate fraction of the image
// side, degrees for rotate, enhancement blend factor, kept bits, threshold.
constexpr OpInfo kOpInfo[kNumOpKinds] = {
    {"ShearX", {0.0, 1.0}},      {"ShearY", {0.0, 1.0}},
    {"TranslateX", {0.0, 1.0}},  {"TranslateY", {0.0, 1.0}},
    {"Rotate", {0.0, 180.0}},    {"Color", {0.0, 2.0}},
    {"Posterize", {1.0, 8.0}},   {"Solarize", {0.0, 256.0}},
    {"Contrast", {0.0, 2.0}},    {"Sharpness", {0.0, 2.0}},
    {"Brightness", {0.0, 2.0}},  {"AutoContrast", {0.0, 0.0}},
    {"Equalize", {0.0, 0.0}},    {"Invert", {0.0, 0.0}},
};

}  // namespace

const char* op_kind_name(OpKind kind) { return kOpInfo[static_cast<int>(kind)].name; }

OpKind op_kind_from_name(const std::string& name) {
  for (int i = 0; i < kNumOpKinds; ++i) {
    if (name == kOpInfo[i].name) return static_cast<OpKind>(i);
  }
  throw std::invalid_argument("policy: unknown op '" + name + "'");
}

MagnitudeRange op_magnitude_range(OpKind kind) {
  return kOpInfo[static_cast<int>(kind)].range;
}

void PolicyTable::validate() const {
  if (static_cast<int>(subs.size()) != kPolicyTableSize)
    throw std::invalid_argument("policy: table must contain exactly " +
                                std::to_string(kPolicyTableSize) + " sub-policies, got " +
                                std::to_string(subs.size()));
  for (std::size_t i = 0; i < subs.size(); ++i) {
    for (const OpSlot& slot : subs[i].slots) {
      if (!(slot.prob >= 0.0 && slot.prob <= 1.0))
        throw std::invalid_argument("policy: sub-policy " + std::to_string(i) +
                                    " prob out of [0,1]");
      const MagnitudeRange r = op_magnitude_range(slot.kind);
      if (slot.magnitude < r.lo || slot.magnitude > r.hi)
        throw std::invalid_argument("policy: sub-policy " + std::to_string(i) + " op " +
                                    op_kind_name(slot.kind) + " magnitude " +
                                    std::to_string(slot.magnitude) + " out of range");
      if (slot.kind == OpKind::kPosterize &&
          slot.magnitude != static_cast<double>(static_cast<int>(slot.magnitude)))
        throw std::invalid_argument("policy: Posterize magnitude must be an integer bit count");
    }
  }
}

PolicyTable load_policy_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("policy: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("policy: " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array())
    throw std::runtime_error("policy: " + path + " must be a JSON array of sub-policies");
  PolicyTable table;
  for (const auto& entry : doc) {
    if (!entry.is_array() || entry.size() != 2)
      throw std::runtime_error("policy: each sub-policy must be an array of two op records");
    SubPolicy sp;
    for (int s = 0; s < 2; ++s) {
      const auto& rec = entry[s];
      if (!rec.is_object() || !rec.contains("op") || !rec.contains("prob") ||
          !rec.contains("magnitude"))
        throw std::runtime_error("policy: op record needs 'op', 'prob' and 'magnitude'");
      sp.slots[s].kind = op_kind_from_name(rec["op"].get<std::string>());
      sp.slots[s].prob = rec["prob"].get<double>();
      sp.slots[s].magnitude = rec["magnitude"].get<double>();
    }
    table.subs.push_back(sp);
  }
  table.validate();
  return table;
}

}  // namespace trainkit
