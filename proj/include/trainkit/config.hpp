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

#include <cstdint>
#include <string>
#include <vector>

#include "trainkit/losses.hpp"

namespace trainkit {

/// Flat key=value run configuration. Unknown keys are errors; every field is
/// echoed back into the frozen resolved-config file written next to the run
/// outputs, so a run can be reproduced from that file alone.
struct RunConfig {
  // data.*
  std::string data_dir;
  int classes = 10;
  // model.*
  int embed_dim = 64;
  // train.*
  int batch_size = 128;
  int epochs = 20;
  LossMode loss_mode = LossMode::kCe;
  int pk_p = 8;  // classes per batch when the triplet loss is active
  int pk_q = 4;  // samples per class
  // loss.*
  double epsilon = 0.1;
  double triplet_margin = 0.3;
  double arcface_scale = 30.0;
  double arcface_margin = 0.5;
  double lambda_aux = 1.0;
  // optim.*
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double warmup_epochs = 1.0;
  // aug.*
  int out_size = 32;
  double area_lo = 0.08, area_hi = 1.0;
  double aspect_lo = 0.75, aspect_hi = 4.0 / 3.0;
  double flip_prob = 0.5;
  double cutmix_prob = 0.5;
  double cutmix_alpha = 1.0;
  std::vector<double> mean{0.485, 0.456, 0.406};
  std::vector<double> stddev{0.229, 0.224, 0.225};
  std::string policy_path;  // empty disables the policy step
  // tta.*
  std::vector<int> tta_scales{224, 320, 380, 448};
  double tta_area_lo = 0.8, tta_area_hi = 1.0;
  // run.*
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "run";

  void validate() const;
};

RunConfig load_run_config(const std::string& path);
/// Applies one "key=value" assignment (also used for CLI overrides).
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical serialization: every key, sorted, full precision.
std::string resolved_config_text(const RunConfig& cfg);
std::uint64_t config_digest(const RunConfig& cfg);

}  // namespace trainkit
