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

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace trainkit {

inline constexpr double kFdStep = 1e-5;

/// Central finite difference of a scalar functional with respect to one
/// coordinate, restoring the original value afterwards.
template <typename T, typename F>
double central_difference(F&& value, T& coord, double h = kFdStep) {
  const T orig = coord;
  coord = static_cast<T>(static_cast<double>(orig) + h);
  const double up = value();
  coord = static_cast<T>(static_cast<double>(orig) - h);
  const double down = value();
  coord = orig;
  return (up - down) / (2.0 * h);
}

/// |a - n| / max(1, |a|, |n|), the usual gradient-check error measure.
inline double grad_rel_err(double analytic, double numeric) {
  const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

struct AuditResult {
  std::string name;
  double worst_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Runs every registered finite-difference audit in double precision: the
/// three losses coordinate-by-coordinate, then the end-to-end model+loss
/// composition for each mode at sampled parameter coordinates.
/// `inject_error` perturbs one analytic gradient as a negative control.
std::vector<AuditResult> run_gradient_audits(std::uint64_t seed, bool inject_error = false);

}  // namespace trainkit
