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
#include "trainkit/imageops.hpp"
#include "trainkit/model.hpp"
#include "trainkit/rng.hpp"

namespace trainkit {

enum class CropMethod { kCenterAfterShortEdgeResize, kRandomArea80to100 };

/// Multi-scale evaluation settings. The canonical scale set is
/// {224, 320, 380, 448} with a 256/224 short-edge resize ratio; small-image
/// runs scale the same geometry proportionally via the config.
struct TtaConfig {
  std::vector<int> scales{224, 320, 380, 448};
  double area_lo = 0.8, area_hi = 1.0;
  double aspect_lo = 0.75, aspect_hi = 4.0 / 3.0;

  void validate() const;
};

struct TtaView {
  int scale = 0;
  CropMethod method = CropMethod::kCenterAfterShortEdgeResize;
  ImageF32 image;  // scale x scale, raw 0..255 values (not yet normalized)
};

/// Deterministic center view: resize the shorter edge to round(S * 256/224)
/// keeping aspect, then crop the centered S x S region.
ImageU8 center_view(const ImageU8& img, int scale);

/// One view per (scale, crop method): the centered short-edge-resize crop and
/// a random crop with area fraction in [area_lo, area_hi]. Random draws are
/// seeded per (run seed, image id, scale) so evaluation is reproducible.
std::vector<TtaView> make_views(const ImageU8& img, const TtaConfig& cfg,
                                std::uint64_t run_seed, std::uint64_t image_id);

/// Per view, the class probabilities of the view and of its horizontal flip
/// are averaged; the final prediction is the unweighted mean over all views.
template <typename T>
std::vector<double> predict_tta(const TinyBackbone<T>& model, const ImageU8& img,
                                const Normalization& norm, const TtaConfig& cfg,
                                std::uint64_t run_seed, std::uint64_t image_id) {
  const std::vector<TtaView> views = make_views(img, cfg, run_seed, image_id);
  std::vector<double> acc(static_cast<std::size_t>(model.config().classes), 0.0);
  for (const TtaView& view : views) {
    std::vector<ImageF32> pair{normalize_raw(view.image, norm),
                               normalize_raw(hflip(view.image), norm)};
    const Tensor<double> p = model.predict_probs(pair);
    for (int j = 0; j < p.dim(1); ++j)
      acc[static_cast<std::size_t>(j)] += 0.5 * (p.at(0, j) + p.at(1, j));
  }
  for (double& v : acc) v /= static_cast<double>(views.size());
  return acc;
}

/// N x K class probabilities keyed by sample id; the interchange format
/// between evaluation and ensembling.
struct ProbMatrix {
  int classes = 0;
  std::vector<std::string> ids;
  std::vector<double> values;  // ids.size() x classes, row-major

  int rows() const { return static_cast<int>(ids.size()); }
  double at(int i, int j) const {
    return values[static_cast<std::size_t>(i) * classes + j];
  }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * classes + j]; }
  void validate() const;  // rows sum to 1 within 1e-9, entries in [0,1]
};

/// Elementwise unweighted mean over matrices sharing the same sample-id set;
/// rows are aligned by id (the first matrix fixes the output order). An id
/// mismatch raises an error listing the difference.
ProbMatrix fuse(const std::vector<ProbMatrix>& members);

/// Fraction of rows whose argmax matches the label; argmax ties resolve to
/// the lowest class index.
double top1_accuracy(const ProbMatrix& probs, const std::vector<int>& labels);

// Text format: header "probmatrix v1 N K", then one line per sample with the
// id and K probabilities at 9 significant digits.
void write_probmatrix(const std::string& path, const ProbMatrix& pm);
ProbMatrix read_probmatrix(const std::string& path);

}  // namespace trainkit
