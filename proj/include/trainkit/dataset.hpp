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

#include "trainkit/image.hpp"

namespace trainkit {

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the dataset directory
  int cls = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::vector<int> labels() const;
  std::vector<std::string> ids() const;
};

/// CSV with a "sample_id,path,class_index" header. Ids must be unique and
/// whitespace-free; class indices must lie in [0, num_classes).
Manifest load_manifest(const std::string& csv_path, int num_classes);
void save_manifest(const std::string& csv_path, const Manifest& manifest);

/// Loads every image of a manifest; paths resolve against base_dir.
std::vector<ImageU8> load_images(const Manifest& manifest, const std::string& base_dir);

/// Class-conditioned textured patterns: per-class base hue plus a geometric
/// motif (stripes or checkers) with per-image phase/period jitter and pixel
/// noise. Hues are shared between motif pairs, so mean color alone cannot
/// separate the classes.
struct SyntheticSpec {
  int classes = 10;
  int train_per_class = 200;
  int val_per_class = 50;
  int size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Writes images/ plus train.csv and val.csv into out_dir.
void make_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_dir);

/// Nearest-centroid classifier on per-image mean RGB: fit on train.csv,
/// score top-1 on val.csv. The reference floor a trained model must beat.
double nearest_centroid_baseline(const std::string& dataset_dir, int num_classes);

}  // namespace trainkit
