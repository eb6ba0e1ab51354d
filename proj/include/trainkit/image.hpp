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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace trainkit {

/// RGB raster, row-major height x width x 3, 8-bit storage precision.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size == width * height * 3

  ImageU8() = default;
  ImageU8(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return width <= 0 || height <= 0; }
};

/// Same layout in float processing precision (values may be negative after
/// normalization).
struct ImageF32 {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  ImageF32() = default;
  ImageF32(int w, int h, float fill = 0.0f);

  float at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  float& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return width <= 0 || height <= 0; }
};

/// Per-channel normalization constants; std components must be positive.
struct Normalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
  void validate() const;
};

// Binary PPM (P6, maxval 255). Throws std::runtime_error on malformed input.
ImageU8 load_ppm(const std::string& path);
void save_ppm(const ImageU8& img, const std::string& path);

ImageU8 hflip(const ImageU8& img);
ImageF32 hflip(const ImageF32& img);

/// Bilinear resize with half-pixel-centered sampling; identity dimensions
/// reproduce the input bitwise.
ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h);

/// Axis-aligned crop; the rectangle must lie inside the image.
ImageU8 crop(const ImageU8& img, int x, int y, int w, int h);

ImageF32 to_f32(const ImageU8& img);  // raw 0..255 values
ImageU8 to_u8(const ImageF32& img01);  // rounds and clamps [0,1] values

/// out[c] = (in[c]/255 - mean[c]) / std[c]
ImageF32 normalize(const ImageU8& img, const Normalization& norm);
/// Same formula applied to a float image holding raw 0..255 values.
ImageF32 normalize_raw(const ImageF32& raw, const Normalization& norm);
/// Inverse of normalize up to the /255 scaling: returns values in [0,1].
ImageF32 denormalize(const ImageF32& img, const Normalization& norm);

}  // namespace trainkit
