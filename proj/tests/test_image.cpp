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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <stdexcept>

#include "doctest.h"
#include "trainkit/rng.hpp"

using namespace trainkit;

namespace {

ImageU8 random_image(int w, int h, std::uint64_t seed) {
  ImageU8 img(w, h);
  RngStream rng(seed, 0);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Independent scalar half-pixel-centered bilinear, one axis at a time.
double bilinear_1d_oracle(const std::vector<double>& src, double fx) {
  const int n = static_cast<int>(src.size());
  const int x0 = static_cast<int>(std::floor(fx));
  const double t = fx - x0;
  const auto clamp = [n](int i) { return std::min(std::max(i, 0), n - 1); };
  return (1.0 - t) * src[clamp(x0)] + t * src[clamp(x0 + 1)];
}

}  // namespace

TEST_CASE("ppm round-trips bitwise") {
  const ImageU8 img = random_image(13, 9, 5);
  const std::string path = temp_path("trainkit_test_roundtrip.ppm");
  save_ppm(img, path);
  const ImageU8 back = load_ppm(path);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("ppm loader rejects malformed files") {
  const std::string path = temp_path("trainkit_test_bad.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n4 4\n255\nxx";  // truncated raster
  }
  CHECK_THROWS_AS(load_ppm(path), std::runtime_error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n255\n";
  }
  CHECK_THROWS_AS(load_ppm(path), std::runtime_error);
  CHECK_THROWS_AS(load_ppm(temp_path("trainkit_does_not_exist.ppm")), std::runtime_error);
}

TEST_CASE("ppm loader skips header comments") {
  const std::string path = temp_path("trainkit_test_comment.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# a comment\n2 1\n255\n";
    const unsigned char px[6] = {1, 2, 3, 4, 5, 6};
    out.write(reinterpret_cast<const char*>(px), 6);
  }
  const ImageU8 img = load_ppm(path);
  CHECK(img.width == 2);
  CHECK(img.at(1, 0, 2) == 6);
}

TEST_CASE("hflip swaps a 1x2 image and is an involution") {
  ImageU8 img(2, 1);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = static_cast<std::uint8_t>(10 + c);  // A
    img.at(1, 0, c) = static_cast<std::uint8_t>(200 + c);  // B
  }
  const ImageU8 flipped = hflip(img);
  for (int c = 0; c < 3; ++c) {
    CHECK(flipped.at(0, 0, c) == 200 + c);
    CHECK(flipped.at(1, 0, c) == 10 + c);
  }
  CHECK(hflip(flipped).pixels == img.pixels);

  const ImageU8 rand = random_image(17, 11, 3);
  CHECK(hflip(hflip(rand)).pixels == rand.pixels);
}

TEST_CASE("hflip leaves column-constant images unchanged") {
  ImageU8 img(6, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(40 * y + c);
  CHECK(hflip(img).pixels == img.pixels);
}

TEST_CASE("resize to identical dimensions is bitwise identity") {
  const ImageU8 img = random_image(21, 14, 7);
  CHECK(resize_bilinear(img, 21, 14).pixels == img.pixels);
}

TEST_CASE("resize keeps constant images constant") {
  const ImageU8 img(9, 5, 77);
  const ImageU8 out = resize_bilinear(img, 23, 31);
  for (auto v : out.pixels) CHECK(v == 77);
}

TEST_CASE("resize matches the scalar bilinear oracle on a 2x1 ramp") {
  ImageU8 img(2, 1);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0;
    img.at(1, 0, c) = 255;
  }
  const ImageU8 out = resize_bilinear(img, 4, 1);
  const std::vector<double> src{0.0, 255.0};
  for (int x = 0; x < 4; ++x) {
    const double fx = (x + 0.5) * (2.0 / 4.0) - 0.5;
    const auto expected = static_cast<std::uint8_t>(std::lround(bilinear_1d_oracle(src, fx)));
    CHECK(out.at(x, 0, 0) == expected);
  }
  // Frozen values from the oracle.
  CHECK(out.at(0, 0, 0) == 0);
  CHECK(out.at(1, 0, 0) == 64);
  CHECK(out.at(2, 0, 0) == 191);
  CHECK(out.at(3, 0, 0) == 255);
}

TEST_CASE("normalize formula and round trip") {
  ImageU8 img(1, 1);
  for (int c = 0; c < 3; ++c) img.at(0, 0, c) = 255;

  Normalization ident{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  CHECK(normalize(img, ident).at(0, 0, 0) == doctest::Approx(1.0));

  Normalization half{{0.5f, 0.5f, 0.5f}, {0.5f, 0.5f, 0.5f}};
  CHECK(normalize(img, half).at(0, 0, 1) == doctest::Approx(1.0));
  for (int c = 0; c < 3; ++c) img.at(0, 0, c) = 0;
  CHECK(normalize(img, half).at(0, 0, 2) == doctest::Approx(-1.0));

  Normalization bad{{0.f, 0.f, 0.f}, {1.f, 0.f, 1.f}};
  CHECK_THROWS_AS(normalize(img, bad), std::invalid_argument);

  const ImageU8 rand = random_image(8, 8, 11);
  Normalization imagenet;
  const ImageF32 norm = normalize(rand, imagenet);
  const ImageF32 denorm = denormalize(norm, imagenet);
  for (std::size_t i = 0; i < rand.pixels.size(); ++i)
    CHECK(denorm.pixels[i] == doctest::Approx(rand.pixels[i] / 255.0).epsilon(1e-6));
}

TEST_CASE("crop rejects out-of-bounds rectangles") {
  const ImageU8 img = random_image(10, 10, 1);
  CHECK_THROWS_AS(crop(img, 5, 5, 6, 6), std::invalid_argument);
  CHECK_THROWS_AS(crop(img, -1, 0, 2, 2), std::invalid_argument);
  const ImageU8 c = crop(img, 2, 3, 4, 5);
  CHECK(c.width == 4);
  CHECK(c.height == 5);
  CHECK(c.at(0, 0, 0) == img.at(2, 3, 0));
}
