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

#include "trainkit/imageops.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <stdexcept>

#include "doctest.h"
#include "trainkit/policy.hpp"

using namespace trainkit;

namespace {

ImageU8 random_image(int w, int h, std::uint64_t seed) {
  ImageU8 img(w, h);
  RngStream rng(seed, 0);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

PolicyTable invert_table(double prob) {
  PolicyTable t;
  for (int i = 0; i < kPolicyTableSize; ++i)
    t.subs.push_back(SubPolicy{{OpSlot{OpKind::kInvert, prob, 0.0},
                                OpSlot{OpKind::kInvert, prob, 0.0}}});
  return t;
}

const std::string kPolicyPath = std::string(TRAINKIT_DATA_DIR) + "/autoaugment_imagenet.json";

}  // namespace

TEST_CASE("forced full-frame crop is bitwise identity") {
  const ImageU8 img = random_image(64, 64, 2);
  RngStream rng(1, 1);
  const ImageU8 out = random_resized_crop(img, 1.0, 1.0, 1.0, 1.0, 64, rng);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("random_resized_crop is deterministic under a fixed stream") {
  const ImageU8 img = random_image(48, 40, 3);
  RngStream a(7, 9), b(7, 9);
  const ImageU8 ra = random_resized_crop(img, 0.08, 1.0, 0.75, 4.0 / 3.0, 32, a);
  const ImageU8 rb = random_resized_crop(img, 0.08, 1.0, 0.75, 4.0 / 3.0, 32, b);
  CHECK(ra.pixels == rb.pixels);
}

TEST_CASE("10k sampled rects respect the area range and nearly the aspect range") {
  RngStream rng(11, 0);
  const double delta = 0.02;
  for (int i = 0; i < 10000; ++i) {
    const Rect r = sample_crop_rect(256, 256, 0.08, 1.0, 0.75, 4.0 / 3.0, rng);
    const double frac = static_cast<double>(r.area()) / (256.0 * 256.0);
    REQUIRE(frac >= 0.08);
    REQUIRE(frac <= 1.0);
    const double aspect = static_cast<double>(r.x1 - r.x0) / (r.y1 - r.y0);
    REQUIRE(aspect >= 0.75 - delta);
    REQUIRE(aspect <= 4.0 / 3.0 + delta);
  }
}

TEST_CASE("infeasible ranges fall back to the aspect-clamped center crop") {
  RngStream rng(1, 2);
  // A 100x10 strip cannot host a near-square crop of 90%+ area.
  const Rect r = sample_crop_rect(100, 10, 0.9, 1.0, 0.75, 4.0 / 3.0, rng);
  CHECK(r.y0 == 0);
  CHECK(r.y1 == 10);
  const double aspect = static_cast<double>(r.x1 - r.x0) / (r.y1 - r.y0);
  CHECK(aspect == doctest::Approx(4.0 / 3.0).epsilon(0.05));
}

TEST_CASE("apply_op identities") {
  const ImageU8 img = random_image(24, 16, 4);
  RngStream rng(5, 5);

  CHECK(apply_op(OpKind::kPosterize, 8, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kSolarize, 256, img, rng).pixels == img.pixels);

  const ImageU8 once = apply_op(OpKind::kInvert, 0, img, rng);
  CHECK(once.pixels != img.pixels);
  CHECK(apply_op(OpKind::kInvert, 0, once, rng).pixels == img.pixels);

  CHECK(apply_op(OpKind::kRotate, 0.0, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kShearX, 0.0, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kTranslateY, 0.0, img, rng).pixels == img.pixels);

  // Blend factor 1 reproduces the input for every enhancement op.
  CHECK(apply_op(OpKind::kColor, 1.0, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kContrast, 1.0, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kBrightness, 1.0, img, rng).pixels == img.pixels);
  CHECK(apply_op(OpKind::kSharpness, 1.0, img, rng).pixels == img.pixels);
}

TEST_CASE("apply_op semantics spot checks") {
  RngStream rng(6, 6);

  SUBCASE("posterize keeps the top bits") {
    ImageU8 img(1, 1);
    img.at(0, 0, 0) = 0b10111011;
    img.at(0, 0, 1) = 0xFF;
    img.at(0, 0, 2) = 0x01;
    const ImageU8 out = apply_op(OpKind::kPosterize, 3, img, rng);
    CHECK(out.at(0, 0, 0) == 0b10100000);
    CHECK(out.at(0, 0, 1) == 0b11100000);
    CHECK(out.at(0, 0, 2) == 0);
  }

  SUBCASE("solarize inverts at and above the threshold") {
    ImageU8 img(2, 1);
    for (int c = 0; c < 3; ++c) {
      img.at(0, 0, c) = 100;
      img.at(1, 0, c) = 200;
    }
    const ImageU8 out = apply_op(OpKind::kSolarize, 128, img, rng);
    CHECK(out.at(0, 0, 0) == 100);
    CHECK(out.at(1, 0, 0) == 55);
  }

  SUBCASE("autocontrast rescales min/max to 0/255") {
    ImageU8 img(3, 1);
    for (int c = 0; c < 3; ++c) {
      img.at(0, 0, c) = 50;
      img.at(1, 0, c) = 100;
      img.at(2, 0, c) = 150;
    }
    const ImageU8 out = apply_op(OpKind::kAutoContrast, 0, img, rng);
    CHECK(out.at(0, 0, 0) == 0);
    // exact midpoint 127.5 may round either way in float
    CHECK((out.at(1, 0, 0) == 127 || out.at(1, 0, 0) == 128));
    CHECK(out.at(2, 0, 0) == 255);
  }

  SUBCASE("equalize leaves constant channels alone") {
    const ImageU8 img(8, 8, 93);
    CHECK(apply_op(OpKind::kEqualize, 0, img, rng).pixels == img.pixels);
  }

  SUBCASE("brightness 0 blacks the image out") {
    const ImageU8 img = random_image(5, 5, 8);
    const ImageU8 out = apply_op(OpKind::kBrightness, 0.0, img, rng);
    for (auto v : out.pixels) CHECK(v == 0);
  }

  SUBCASE("all op kinds preserve dimensions") {
    const ImageU8 img = random_image(15, 9, 10);
    for (int k = 0; k < kNumOpKinds; ++k) {
      const auto kind = static_cast<OpKind>(k);
      const auto range = op_magnitude_range(kind);
      const double mag = (kind == OpKind::kPosterize) ? 4.0 : 0.5 * (range.lo + range.hi);
      const ImageU8 out = apply_op(kind, mag, img, rng);
      CHECK(out.width == img.width);
      CHECK(out.height == img.height);
    }
  }
}

TEST_CASE("autoaugment identity tables leave the image unchanged") {
  const ImageU8 img = random_image(20, 20, 12);
  RngStream rng(13, 0);
  CHECK(autoaugment(img, invert_table(0.0), rng).pixels == img.pixels);
  // p=1 applies Invert twice per sub-policy: a double inversion.
  CHECK(autoaugment(img, invert_table(1.0), rng).pixels == img.pixels);
}

TEST_CASE("autoaugment equals a manual replay of the recorded draws") {
  const PolicyTable table = load_policy_table(kPolicyPath);
  const ImageU8 img = random_image(32, 32, 14);
  for (std::uint64_t stream = 0; stream < 20; ++stream) {
    RngStream rng(99, stream);
    const ImageU8 out = autoaugment(img, table, rng);

    RngStream replay(99, stream);
    const auto idx = replay.next_below(static_cast<std::uint32_t>(table.subs.size()));
    ImageU8 manual = img;
    for (const OpSlot& slot : table.subs[idx].slots) {
      if (replay.bernoulli(slot.prob)) manual = apply_op(slot.kind, slot.magnitude, manual, replay);
    }
    CHECK(out.pixels == manual.pixels);
    CHECK(rng.draw_count() == replay.draw_count());
  }
}

TEST_CASE("policy loader validates the table") {
  const PolicyTable table = load_policy_table(kPolicyPath);
  CHECK(table.subs.size() == kPolicyTableSize);

  PolicyTable short_table = table;
  short_table.subs.pop_back();
  CHECK_THROWS_AS(short_table.validate(), std::invalid_argument);

  PolicyTable bad_mag = table;
  bad_mag.subs[0].slots[0] = OpSlot{OpKind::kPosterize, 0.5, 0.0};  // bits must be >= 1
  CHECK_THROWS_AS(bad_mag.validate(), std::invalid_argument);

  PolicyTable bad_prob = table;
  bad_prob.subs[3].slots[1].prob = 1.5;
  CHECK_THROWS_AS(bad_prob.validate(), std::invalid_argument);

  CHECK_THROWS_AS(op_kind_from_name("Blur"), std::invalid_argument);
}

TEST_CASE("cutmix with lambda 1 keeps the base image") {
  const ImageF32 base(16, 16, 0.25f);
  const ImageF32 donor(16, 16, 0.75f);
  RngStream rng(3, 3);
  const CutmixResult r = cutmix_pair(base, 2, donor, 5, 1.0, rng, 1.0);
  CHECK(r.image.pixels == base.pixels);
  REQUIRE(r.target.entries.size() == 1);
  CHECK(r.target.entries[0].cls == 2);
  CHECK(r.target.entries[0].weight == 1.0);
}

TEST_CASE("cutmix with lambda 0 swaps in the donor entirely") {
  const ImageF32 base(16, 16, 0.25f);
  const ImageF32 donor(16, 16, 0.75f);
  RngStream rng(4, 4);
  const CutmixResult r = cutmix_pair(base, 2, donor, 5, 1.0, rng, 0.0);
  CHECK(r.image.pixels == donor.pixels);
  REQUIRE(r.target.entries.size() == 1);
  CHECK(r.target.entries[0].cls == 5);
}

TEST_CASE("a 112x112 patch in a 224x224 image mixes labels 3:1") {
  const ImageF32 base(224, 224, 0.0f);
  const ImageF32 donor(224, 224, 1.0f);
  const CutmixResult r = cutmix_apply(base, 0, donor, 1, Rect{50, 60, 162, 172});
  REQUIRE(r.target.entries.size() == 2);
  CHECK(r.target.entries[0].cls == 0);
  CHECK(r.target.entries[0].weight == 0.75);
  CHECK(r.target.entries[1].weight == 0.25);
}

TEST_CASE("cutmix donor weight equals the pasted pixel count exactly") {
  const int w = 37, h = 23;
  const ImageF32 base(w, h, 0.0f);
  const ImageF32 donor(w, h, 1.0f);
  RngStream rng(21, 0);
  for (int i = 0; i < 100; ++i) {
    const CutmixResult r = cutmix_pair(base, 0, donor, 1, 1.0, rng);
    long pasted = 0;
    for (std::size_t p = 0; p < r.image.pixels.size(); p += 3)
      if (r.image.pixels[p] != 0.0f) ++pasted;
    const double donor_weight =
        r.target.entries.size() == 2
            ? r.target.entries[1].weight
            : (r.target.entries[0].cls == 1 ? 1.0 : 0.0);
    CHECK(donor_weight == static_cast<double>(pasted) / (static_cast<double>(w) * h));
    double sum = 0.0;
    for (const auto& e : r.target.entries) {
      CHECK(e.weight > 0.0);
      sum += e.weight;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("cutmix merges equal classes into one entry") {
  const ImageF32 base(8, 8, 0.0f);
  const ImageF32 donor(8, 8, 1.0f);
  const CutmixResult r = cutmix_apply(base, 3, donor, 3, Rect{0, 0, 4, 8});
  REQUIRE(r.target.entries.size() == 1);
  CHECK(r.target.entries[0].cls == 3);
  CHECK(r.target.entries[0].weight == 1.0);
}

TEST_CASE("degenerate config reduces augment_train to scaling") {
  const ImageU8 img = random_image(32, 32, 30);
  AugmentConfig cfg;
  cfg.out_size = 32;
  cfg.area_lo = cfg.area_hi = 1.0;
  cfg.aspect_lo = cfg.aspect_hi = 1.0;
  cfg.flip_prob = 0.0;
  cfg.cutmix_prob = 0.0;
  cfg.norm = Normalization{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const PolicyTable ident = invert_table(0.0);
  cfg.policy = &ident;

  RngStream rng(1, 0), partner_rng(1, 1);
  const AugmentedSample s = augment_train(img, 4, img, 7, cfg, rng, partner_rng);
  REQUIRE(s.target.entries.size() == 1);
  CHECK(s.target.entries[0].cls == 4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(s.image.pixels[i] == doctest::Approx(img.pixels[i] / 255.0).epsilon(1e-7));
}

TEST_CASE("forced lambda 0 with certain cutmix yields the partner sample") {
  const ImageU8 img = random_image(40, 40, 31);
  const ImageU8 partner = random_image(40, 40, 32);
  AugmentConfig cfg;
  cfg.out_size = 32;
  cfg.cutmix_prob = 1.0;

  RngStream rng(2, 0), partner_rng(2, 1);
  const AugmentedSample s =
      augment_train(img, 1, partner, 8, cfg, rng, partner_rng, nullptr, 0.0);

  RngStream partner_replay(2, 1);
  const ImageF32 expected = augment_steps14(partner, cfg, partner_replay);
  CHECK(s.image.pixels == expected.pixels);
  REQUIRE(s.target.entries.size() == 1);
  CHECK(s.target.entries[0].cls == 8);
}

TEST_CASE("augment_train is byte-identical across runs with one seed") {
  const ImageU8 img = random_image(48, 36, 33);
  const ImageU8 partner = random_image(52, 44, 34);
  const PolicyTable table = load_policy_table(kPolicyPath);
  AugmentConfig cfg;
  cfg.out_size = 32;
  cfg.policy = &table;

  auto run = [&] {
    RngStream rng(77, 3), partner_rng(77, 4);
    return augment_train(img, 0, partner, 1, cfg, rng, partner_rng);
  };
  const AugmentedSample a = run();
  const AugmentedSample b = run();
  CHECK(a.image.pixels == b.image.pixels);
  REQUIRE(a.target.entries.size() == b.target.entries.size());
  for (std::size_t i = 0; i < a.target.entries.size(); ++i) {
    CHECK(a.target.entries[i].cls == b.target.entries[i].cls);
    CHECK(a.target.entries[i].weight == b.target.entries[i].weight);
  }
}

TEST_CASE("pipeline stages execute in the declared order") {
  const ImageU8 img = random_image(32, 32, 35);
  const PolicyTable table = invert_table(0.5);
  AugmentConfig cfg;
  cfg.out_size = 24;
  cfg.policy = &table;
  cfg.cutmix_prob = 1.0;

  std::vector<std::string> trace;
  RngStream rng(5, 0), partner_rng(5, 1);
  augment_train(img, 0, img, 1, cfg, rng, partner_rng, &trace);
  CHECK(trace == std::vector<std::string>{"crop", "flip", "autoaugment", "normalize", "cutmix"});
}

TEST_CASE("mixed target validation") {
  CHECK_NOTHROW(MixedTarget::single(0).validate(3));
  CHECK_THROWS_AS(MixedTarget{}.validate(3), std::invalid_argument);
  CHECK_THROWS_AS((MixedTarget{{{0, 0.5}, {0, 0.5}}}).validate(3), std::invalid_argument);
  CHECK_THROWS_AS((MixedTarget{{{0, 0.5}, {1, 0.6}}}).validate(3), std::invalid_argument);
  CHECK_THROWS_AS((MixedTarget{{{0, 1.0}, {1, 0.0}}}).validate(3), std::invalid_argument);
  CHECK_THROWS_AS(MixedTarget::single(5).validate(3), std::invalid_argument);
  CHECK((MixedTarget{{{2, 0.25}, {1, 0.75}}}).dominant_class() == 1);
  CHECK((MixedTarget{{{2, 0.5}, {1, 0.5}}}).dominant_class() == 2);  // base wins ties
}
