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

#include "trainkit/losses.hpp"

namespace trainkit {

std::vector<double> smooth_targets(int y, int num_classes, double eps) {
  if (num_classes < 2) throw std::invalid_argument("smooth_targets: need at least 2 classes");
  if (y < 0 || y >= num_classes) throw std::invalid_argument("smooth_targets: label out of range");
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("smooth_targets: eps must be in [0, 1)");
  std::vector<double> q(static_cast<std::size_t>(num_classes), eps / (num_classes - 1));
  q[static_cast<std::size_t>(y)] = 1.0 - eps;
  return q;
}

std::vector<double> mixed_smoothed_row(const MixedTarget& target, int num_classes, double eps) {
  target.validate(num_classes);
  std::vector<double> q(static_cast<std::size_t>(num_classes), 0.0);
  for (const MixedTarget::Entry& e : target.entries) {
    const std::vector<double> s = smooth_targets(e.cls, num_classes, eps);
    for (int j = 0; j < num_classes; ++j) q[static_cast<std::size_t>(j)] += e.weight * s[static_cast<std::size_t>(j)];
  }
  return q;
}

LossMode loss_mode_from_name(const std::string& name) {
  if (name == "ce") return LossMode::kCe;
  if (name == "ce+triplet") return LossMode::kCeTriplet;
  if (name == "ce+arcface") return LossMode::kCeArcface;
  throw std::invalid_argument("loss: unknown mode '" + name +
                              "' (expected ce, ce+triplet or ce+arcface)");
}

const char* loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::kCe:
      return "ce";
    case LossMode::kCeTriplet:
      return "ce+triplet";
    case LossMode::kCeArcface:
      return "ce+arcface";
  }
  return "?";
}

}  // namespace trainkit
