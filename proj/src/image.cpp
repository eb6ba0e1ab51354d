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

#include "trainkit/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace trainkit {

ImageU8::ImageU8(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

ImageF32::ImageF32(int w, int h, float fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

void Normalization::validate() const {
  for (float s : std) {
    if (!(s > 0.0f)) throw std::invalid_argument("normalization std must be positive");
  }
}

namespace {

// Reads the next whitespace/comment-delimited token of a PNM header.
std::string next_pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_pnm_int(std::istream& in, const std::string& what) {
  const std::string tok = next_pnm_token(in);
  if (tok.empty()) throw std::runtime_error("ppm: missing " + what);
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw std::runtime_error("ppm: bad " + what + " '" + tok + "'");
  }
  return std::stoi(tok);
}

}  // namespace

ImageU8 load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ppm: cannot open " + path);
  std::string magic = next_pnm_token(in);
  if (magic != "P6") throw std::runtime_error("ppm: " + path + " is not binary P6");
  const int w = parse_pnm_int(in, "width");
  const int h = parse_pnm_int(in, "height");
  const int maxval = parse_pnm_int(in, "maxval");
  if (w < 1 || h < 1) throw std::runtime_error("ppm: " + path + " has empty dimensions");
  if (maxval != 255) throw std::runtime_error("ppm: " + path + " maxval must be 255");
  // Exactly one whitespace byte separates the header from the raster.
  ImageU8 img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw std::runtime_error("ppm: " + path + " truncated raster");
  return img;
}

void save_ppm(const ImageU8& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("ppm: refusing to write empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ppm: cannot write " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("ppm: short write to " + path);
}

namespace {

template <typename Img>
Img hflip_impl(const Img& img) {
  Img out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    }
  }
  return out;
}

}  // namespace

ImageU8 hflip(const ImageU8& img) { return hflip_impl(img); }
ImageF32 hflip(const ImageF32& img) { return hflip_impl(img); }

ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw std::invalid_argument("resize: target must be >= 1x1");
  if (img.empty()) throw std::invalid_argument("resize: empty source");
  ImageU8 out(new_w, new_h);
  const double sx = static_cast<double>(img.width) / new_w;
  const double sy = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double ty = fy - y0;
    const int y0c = std::clamp(y0, 0, img.height - 1);
    const int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < new_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double tx = fx - x0;
      const int x0c = std::clamp(x0, 0, img.width - 1);
      const int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - ty) * ((1.0 - tx) * img.at(x0c, y0c, c) + tx * img.at(x1c, y0c, c)) +
                         ty * ((1.0 - tx) * img.at(x0c, y1c, c) + tx * img.at(x1c, y1c, c));
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
      }
    }
  }
  return out;
}

ImageU8 crop(const ImageU8& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width || y + h > img.height)
    throw std::invalid_argument("crop: rectangle outside image");
  ImageU8 out(w, h);
  for (int yy = 0; yy < h; ++yy) {
    const auto* src = &img.pixels[(static_cast<std::size_t>(y + yy) * img.width + x) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3,
              &out.pixels[static_cast<std::size_t>(yy) * w * 3]);
  }
  return out;
}

ImageF32 to_f32(const ImageU8& img) {
  ImageF32 out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = static_cast<float>(img.pixels[i]);
  return out;
}

ImageU8 to_u8(const ImageF32& img01) {
  ImageU8 out(img01.width, img01.height);
  for (std::size_t i = 0; i < img01.pixels.size(); ++i) {
    const long v = std::lround(static_cast<double>(img01.pixels[i]) * 255.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255));
  }
  return out;
}

ImageF32 normalize(const ImageU8& img, const Normalization& norm) {
  norm.validate();
  ImageF32 out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.pixels[i] = (static_cast<float>(img.pixels[i]) / 255.0f - norm.mean[c]) / norm.std[c];
  }
  return out;
}

ImageF32 normalize_raw(const ImageF32& raw, const Normalization& norm) {
  norm.validate();
  ImageF32 out(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.pixels[i] = (raw.pixels[i] / 255.0f - norm.mean[c]) / norm.std[c];
  }
  return out;
}

ImageF32 denormalize(const ImageF32& img, const Normalization& norm) {
  ImageF32 out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    out.pixels[i] = img.pixels[i] * norm.std[c] + norm.mean[c];
  }
  return out;
}

}  // namespace trainkit
