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

#include "trainkit/optim.hpp"

#include <numbers>

namespace trainkit {

void LrSchedule::validate() const {
  if (!(base_lr > 0.0)) throw std::invalid_argument("schedule: base_lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("schedule: batch_size must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw std::invalid_argument("schedule: need 0 <= warmup_steps < total_steps");
}

double initial_lr(const LrSchedule& sched) {
  sched.validate();
  return sched.base_lr * static_cast<double>(sched.batch_size) / 256.0;
}

double lr_at(std::int64_t step, const LrSchedule& sched) {
  const double eta = initial_lr(sched);
  if (step < 0 || step > sched.total_steps)
    throw std::out_of_range("schedule: step " + std::to_string(step) + " outside [0, " +
                            std::to_string(sched.total_steps) + "]");
  if (step < sched.warmup_steps)
    return eta * static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
  const double t = static_cast<double>(step - sched.warmup_steps) /
                   static_cast<double>(sched.total_steps - sched.warmup_steps);
  return eta * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace trainkit
