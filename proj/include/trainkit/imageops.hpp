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

#include <optional>
#include <string>
#include <vector>

#include "trainkit/image.hpp"
#include "trainkit/mixed_target.hpp"
#include "trainkit/policy.hpp"
#include "trainkit/rng.hpp"

namespace trainkit {

/// Training-time augmentation settings. The pipeline is: random resized crop,
/// horizontal flip, policy-table augmentation, normalization, cutmix.
struct AugmentConfig {
  int out_size = 32;
  double area_lo = 0.08, area_hi = 1.0;
  double aspect_lo = 0.75, aspect_hi = 4.0 / 3.0;
  double flip_prob = 0.5;
  double cutmix_prob = 0.5;
  double cutmix_alpha = 1.0;
  Normalization norm;
  const PolicyTable* policy = nullptr;  // null disables the policy step

  void validate() const;
};

struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  int area() const { return (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0; }
};

/// Rejection-samples a crop rectangle whose realized (post-rounding) area
/// fraction lies in [area_lo, area_hi] and whose aspect ratio was drawn from
/// [aspect_lo, aspect_hi]. After 10 infeasible attempts it falls back to the
/// largest aspect-clamped centered rectangle, so it never fails.
Rect sample_crop_rect(int width, int height, double area_lo, double area_hi, double aspect_lo,
                      double aspect_hi, RngStream& rng);

/// sample_crop_rect followed by a bilinear resize to out_size x out_size.
ImageU8 random_resized_crop(const ImageU8& img, double area_lo, double area_hi,
                            double aspect_lo, double aspect_hi, int out_size, RngStream& rng);
ImageU8 random_resized_crop(const ImageU8& img, const AugmentConfig& cfg, RngStream& rng);

/// Applies one policy op. Geometric ops (shear/translate/rotate) consume one
/// draw for the sign of the magnitude; out-of-bounds samples are filled with
/// mid-gray 128. Magnitudes must already be validated (policy load time).
ImageU8 apply_op(OpKind kind, double magnitude, const ImageU8& img, RngStream& rng);

/// Picks one of the 24 sub-policies uniformly, then applies each of its two
/// slots with the slot's own probability, in slot order.
ImageU8 autoaugment(const ImageU8& img, const PolicyTable& table, RngStream& rng);

struct CutmixResult {
  ImageF32 image;
  MixedTarget target;
  Rect patch;
};

/// Pastes the donor's patch rectangle into the base image. The donor label
/// weight is exactly patch area / (W*H).
CutmixResult cutmix_apply(const ImageF32& base, int base_cls, const ImageF32& donor,
                          int donor_cls, Rect patch);

/// Draws lambda ~ Beta(alpha, alpha) and a uniform patch center, clips the
/// patch at the borders, and mixes labels by the clipped area. forced_lambda
/// bypasses the Beta draw (used by tests and previews).
CutmixResult cutmix_pair(const ImageF32& base, int base_cls, const ImageF32& donor,
                         int donor_cls, double alpha, RngStream& rng,
                         std::optional<double> forced_lambda = std::nullopt);

/// Steps 1-4 of the pipeline: crop, flip, policy ops, normalize.
/// `trace`, when set, records the name of each stage as it executes.
ImageF32 augment_steps14(const ImageU8& img, const AugmentConfig& cfg, RngStream& rng,
                         std::vector<std::string>* trace = nullptr);

struct AugmentedSample {
  ImageF32 image;
  MixedTarget target;
};

/// Full five-step pipeline for one sample. The partner is augmented through
/// steps 1-4 with its own stream only when the cutmix coin comes up.
AugmentedSample augment_train(const ImageU8& img, int cls, const ImageU8& partner,
                              int partner_cls, const AugmentConfig& cfg, RngStream& rng,
                              RngStream& partner_rng,
                              std::vector<std::string>* trace = nullptr,
                              std::optional<double> forced_lambda = std::nullopt);

}  // namespace trainkit
