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

#include <string>

#include "trainkit/config.hpp"
#include "trainkit/inference.hpp"

namespace trainkit {

struct TrainOptions {
  std::string init_checkpoint;  // stage-2 runs start from stage-1 weights
  bool from_scratch = false;    // explicit override for metric-loss modes
};

struct TrainSummary {
  int epochs_run = 0;
  double final_loss = 0.0;
  double final_train_top1 = 0.0;
  std::string checkpoint_path;
  std::string log_path;
};

/// Full training run: augmentation pipeline, combined loss, backprop, SGD
/// with warmup+cosine schedule. Writes resolved-config.txt, train_log.csv and
/// model.ckpt into cfg.out_dir. Metric-loss modes refuse to start without an
/// init checkpoint unless from_scratch is set.
TrainSummary run_training(const RunConfig& cfg, const TrainOptions& opts);

struct EvalResult {
  ProbMatrix probs;
  double top1 = 0.0;
};

/// Evaluates a checkpoint on a manifest split ("val" or "train"). With tta
/// the multi-scale view set is averaged per image; otherwise one centered
/// view at the training resolution is used.
EvalResult run_eval(const RunConfig& cfg, const std::string& checkpoint_path, bool tta,
                    const std::string& split = "val");

}  // namespace trainkit
