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
#include <stdexcept>
#include <string>
#include <vector>

#include "trainkit/tensor.hpp"

namespace trainkit {

/// Linear warmup to the batch-size-scaled initial rate, then a single cosine
/// decay to zero over the remaining steps (no restarts).
struct LrSchedule {
  double base_lr = 0.1;
  int batch_size = 256;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;

  void validate() const;
};

/// (B / 256) * base_lr, the linear scaling rule.
double initial_lr(const LrSchedule& sched);

/// step < warmup: eta_init * step / warmup; afterwards half-cosine from
/// eta_init down to 0 at total_steps. step must lie in [0, total_steps].
double lr_at(std::int64_t step, const LrSchedule& sched);

/// Per-parameter momentum buffers for SGD with coupled L2 weight decay.
struct SgdConfig {
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// g' = g + wd * p;  v <- mu * v + g';  p <- p - lr * v.
/// `name` only feeds diagnostics on shape or non-finite-gradient errors.
template <typename T>
void sgd_step(const std::string& name, std::vector<T>& params, const std::vector<T>& grads,
              std::vector<T>& velocity, double lr, const SgdConfig& cfg) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw std::logic_error("sgd_step: shape mismatch for " + name);
  const T mu = static_cast<T>(cfg.momentum);
  const T wd = static_cast<T>(cfg.weight_decay);
  const T eta = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(static_cast<double>(grads[i])))
      throw std::runtime_error("sgd_step: non-finite gradient in " + name + " at index " +
                               std::to_string(i));
    const T g = grads[i] + wd * params[i];
    velocity[i] = mu * velocity[i] + g;
    params[i] -= eta * velocity[i];
  }
}

/// Owns one velocity buffer per named parameter, in registration order.
template <typename T>
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<ParamRef<T>> params, SgdConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    velocity_.reserve(params_.size());
    for (const ParamRef<T>& p : params_)
      velocity_.push_back(std::vector<T>(p.tensor->data.size(), T(0)));
  }

  void step(const std::vector<Tensor<T>>& grads, double lr) {
    if (grads.size() != params_.size()) throw std::logic_error("sgd: gradient list size mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i)
      sgd_step(params_[i].name, params_[i].tensor->data, grads[i].data, velocity_[i], lr, cfg_);
  }

  const SgdConfig& config() const { return cfg_; }
  const std::vector<std::vector<T>>& velocity() const { return velocity_; }
  std::vector<std::vector<T>>& velocity() { return velocity_; }
  const std::vector<ParamRef<T>>& params() const { return params_; }

 private:
  std::vector<ParamRef<T>> params_;
  SgdConfig cfg_;
  std::vector<std::vector<T>> velocity_;
};

}  // namespace trainkit
