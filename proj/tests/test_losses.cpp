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

#include "trainkit/losses.hpp"

#include <cmath>
#include <limits>

#include <stdexcept>

#include "doctest.h"
#include "trainkit/gradcheck.hpp"
#include "trainkit/rng.hpp"

using namespace trainkit;

namespace {

Tensor<double> random_matrix(int n, int d, double lo, double hi, RngStream& rng) {
  Tensor<double> m({n, d});
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Brute-force transcription of the batch-hard rule: per anchor, the plain
// double loop over all positives and negatives, same distance formula.
double triplet_bruteforce(const Tensor<double>& emb, const std::vector<int>& labels,
                          double margin) {
  const int n = emb.dim(0), d = emb.dim(1);
  auto dist = [&](int i, int j) {
    double ni = 0.0, nj = 0.0, dot = 0.0;
    for (int c = 0; c < d; ++c) {
      ni += emb.at(i, c) * emb.at(i, c);
      nj += emb.at(j, c) * emb.at(j, c);
      dot += emb.at(i, c) * emb.at(j, c);
    }
    return std::sqrt(std::max(ni + nj - 2.0 * dot, 0.0));
  };
  double total = 0.0;
  int valid = 0;
  for (int a = 0; a < n; ++a) {
    double worst_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
    bool has_pos = false, has_neg = false;
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double dj = dist(a, j);
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)]) {
        if (!has_pos || dj > worst_pos) worst_pos = dj;
        has_pos = true;
      } else {
        if (!has_neg || dj < best_neg) best_neg = dj;
        has_neg = true;
      }
    }
    if (!has_pos || !has_neg) continue;
    ++valid;
    const double hinge = margin + worst_pos - best_neg;
    if (hinge > 0.0) total += hinge;
  }
  return total / valid;
}

// Direct scalar transcription of the additive-angular-margin objective:
// -(1/N) sum log( e^{s cos(theta_y + m)} / (e^{s cos(theta_y + m)} +
// sum_{j != y} e^{s cos theta_j}) ), angles through acos.
double arcface_transcription(const Tensor<double>& emb, const Tensor<double>& weight,
                             const std::vector<int>& labels, double s, double m) {
  const int n = emb.dim(0), d = emb.dim(1), k = weight.dim(0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double en = 0.0;
    for (int c = 0; c < d; ++c) en += emb.at(i, c) * emb.at(i, c);
    en = std::sqrt(en);
    double target_term = 0.0, others = 0.0;
    for (int j = 0; j < k; ++j) {
      double wn = 0.0, dot = 0.0;
      for (int c = 0; c < d; ++c) {
        wn += weight.at(j, c) * weight.at(j, c);
        dot += emb.at(i, c) * weight.at(j, c);
      }
      const double cosv =
          std::clamp(dot / (en * std::sqrt(wn)), -1.0 + 1e-7, 1.0 - 1e-7);
      if (j == labels[static_cast<std::size_t>(i)]) {
        const double theta = std::acos(cosv);
        target_term = std::exp(s * std::cos(theta + m));
      } else {
        others += std::exp(s * cosv);
      }
    }
    total += -std::log(target_term / (target_term + others));
  }
  return total / n;
}

}  // namespace

TEST_CASE("smooth_targets formula") {
  CHECK(smooth_targets(0, 2, 0.0) == std::vector<double>{1.0, 0.0});

  const auto q = smooth_targets(1, 4, 0.3);
  CHECK(q[0] == doctest::Approx(0.1));
  CHECK(q[1] == doctest::Approx(0.7));
  CHECK(q[2] == doctest::Approx(0.1));
  CHECK(q[3] == doctest::Approx(0.1));

  const auto big = smooth_targets(2, 1000, 0.1);
  CHECK(big[2] == doctest::Approx(0.9));
  CHECK(big[7] == doctest::Approx(0.1 / 999.0));

  CHECK_THROWS_AS(smooth_targets(0, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(smooth_targets(0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(smooth_targets(4, 4, 0.1), std::invalid_argument);
}

TEST_CASE("smooth_targets sums to one across a (K, eps) sweep") {
  for (int k : {2, 3, 10, 50, 200, 1000}) {
    for (double eps : {0.0, 0.05, 0.1, 0.3}) {
      const auto q = smooth_targets(k / 2, k, eps);
      double sum = 0.0;
      for (double v : q) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("uniform logits give log K") {
  for (int k : {2, 5, 11}) {
    Tensor<double> logits({1, k});
    for (auto& v : logits.data) v = 0.7;
    const auto out = ce_smoothed(logits, std::vector<int>{k - 1}, 0.1);
    CHECK(out.value == doctest::Approx(std::log(k)).epsilon(1e-12));
  }
}

TEST_CASE("ce is linear in mixed targets") {
  RngStream rng(17, 0);
  Tensor<double> logits = random_matrix(1, 6, -2.0, 2.0, rng);
  const auto mixed = ce_smoothed(logits, std::vector<MixedTarget>{{{{0, 0.75}, {1, 0.25}}}}, 0.0);
  const auto a = ce_smoothed(logits, std::vector<int>{0}, 0.0);
  const auto b = ce_smoothed(logits, std::vector<int>{1}, 0.0);
  CHECK(mixed.value == doctest::Approx(0.75 * a.value + 0.25 * b.value).epsilon(1e-12));
}

TEST_CASE("ce is shift invariant") {
  RngStream rng(18, 0);
  for (int i = 0; i < 20; ++i) {
    Tensor<double> logits = random_matrix(3, 7, -4.0, 4.0, rng);
    const auto targets = std::vector<int>{0, 3, 6};
    const double base = ce_smoothed(logits, targets, 0.1).value;
    for (auto& v : logits.data) v += 123.456;
    CHECK(std::abs(ce_smoothed(logits, targets, 0.1).value - base) < 1e-9);
  }
}

TEST_CASE("ce gradient matches finite differences") {
  RngStream rng(19, 0);
  Tensor<double> logits = random_matrix(4, 5, -3.0, 3.0, rng);
  const std::vector<MixedTarget> targets{MixedTarget::single(1), MixedTarget{{{0, 0.6}, {4, 0.4}}},
                                         MixedTarget::single(2), MixedTarget::single(0)};
  const auto out = ce_smoothed(logits, targets, 0.1);
  for (std::size_t c = 0; c < logits.data.size(); ++c) {
    const double numeric = central_difference(
        [&] { return ce_smoothed(logits, targets, 0.1).value; }, logits.data[c]);
    CHECK(grad_rel_err(out.dlogits.data[c], numeric) <= 1e-4);
  }
}

TEST_CASE("ce rejects non-finite logits") {
  Tensor<double> logits({1, 3});
  logits.data[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ce_smoothed(logits, std::vector<int>{0}, 0.1), std::invalid_argument);
}

TEST_CASE("pairwise distances: zeros, 3-4-5, brute force") {
  Tensor<double> same({3, 2}, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0});
  const auto zero = pairwise_euclidean(same);
  for (double v : zero.data) CHECK(v == 0.0);

  Tensor<double> tri({2, 2}, {0.0, 0.0, 3.0, 4.0});
  const auto d = pairwise_euclidean(tri);
  CHECK(d.at(0, 1) == doctest::Approx(5.0));
  CHECK(d.at(1, 0) == doctest::Approx(5.0));
  CHECK(d.at(0, 0) == 0.0);

  RngStream rng(23, 0);
  const Tensor<double> emb = random_matrix(8, 3, -2.0, 2.0, rng);
  const auto dist = pairwise_euclidean(emb);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double diff = emb.at(i, c) - emb.at(j, c);
        acc += diff * diff;
      }
      CHECK(dist.at(i, j) == doctest::Approx(std::sqrt(acc)).epsilon(1e-6));
      CHECK(dist.at(i, j) == dist.at(j, i));
    }
  }
}

TEST_CASE("identical embeddings give loss equal to the margin") {
  Tensor<double> emb({4, 3});
  for (auto& v : emb.data) v = 0.5;
  const auto out = batch_hard_triplet(emb, {0, 0, 1, 1}, TripletConfig{0.37});
  CHECK(out.value == doctest::Approx(0.37));
  CHECK(out.valid_anchors == 4);
}

TEST_CASE("well-separated 1-d clusters have zero loss") {
  Tensor<double> emb({4, 1}, {0.0, 0.1, 10.0, 10.2});
  const auto out = batch_hard_triplet(emb, {0, 0, 1, 1}, TripletConfig{0.5});
  CHECK(out.value == 0.0);
  for (double g : out.dembeddings.data) CHECK(g == 0.0);
}

TEST_CASE("triplet value equals the brute-force enumeration exactly") {
  RngStream rng(29, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(13));  // up to 16
    const int d = 1 + static_cast<int>(rng.next_below(8));
    const int classes = 2 + static_cast<int>(rng.next_below(3));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(classes)));
    labels[0] = labels[1] = 0;
    labels[2] = labels[3] = 1;
    const Tensor<double> emb = random_matrix(n, d, -3.0, 3.0, rng);
    const double margin = rng.uniform(0.0, 1.0);
    const auto out = batch_hard_triplet(emb, labels, TripletConfig{margin});
    CHECK(out.value == triplet_bruteforce(emb, labels, margin));
  }
}

TEST_CASE("degenerate batches raise an error") {
  Tensor<double> emb({2, 2}, {0.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(batch_hard_triplet(emb, {0, 1}, TripletConfig{0.3}), std::runtime_error);
}

TEST_CASE("arcface with zero margin and unit scale is plain cosine softmax") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(4));
    const int d = 2 + static_cast<int>(rng.next_below(5));
    const int k = 2 + static_cast<int>(rng.next_below(5));
    ArcFaceHead<double> head;
    head.scale = 1.0;
    head.margin = 0.0;
    head.weight = random_matrix(k, d, -1.0, 1.0, rng);
    const Tensor<double> emb = random_matrix(n, d, -1.0, 1.0, rng);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k))));

    const Tensor<double> logits = arcface_logits(emb, head, labels);
    const double arc = arcface_loss(emb, head, labels).value;
    const double ce = ce_smoothed(logits, labels, 0.0).value;
    CHECK(std::abs(arc - ce) <= 1e-9);
  }
}

TEST_CASE("aligned embedding gets the margin-penalized logit") {
  // Embedding parallel to its class weight: theta = 0, logit = s cos(m).
  Tensor<double> weight({2, 3}, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0});
  ArcFaceHead<double> head;
  head.scale = 30.0;
  head.margin = 0.5;
  head.weight = weight;
  Tensor<double> emb({1, 3}, {2.0, 0.0, 0.0});
  const Tensor<double> logits = arcface_logits(emb, head, {0});
  // cos(theta) is clamped to 1 - 1e-7, so compare against cos(acos(clamped) + m).
  const double expected = 30.0 * std::cos(std::acos(1.0 - 1e-7) + 0.5);
  CHECK(logits.at(0, 0) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(std::abs(logits.at(0, 0) - 30.0 * std::cos(0.5)) < 0.01);
}

TEST_CASE("arcface matches the direct equation transcription") {
  RngStream rng(37, 0);
  int accepted = 0;
  while (accepted < 50) {
    ArcFaceHead<double> head;
    head.scale = 30.0;
    head.margin = 0.5;
    head.weight = random_matrix(5, 3, -1.0, 1.0, rng);
    const Tensor<double> emb = random_matrix(4, 3, -1.0, 1.0, rng);
    const std::vector<int> labels{0, 1, 2, 3};
    // Stay away from the theta + m >= pi fallback so both routes compute
    // the same analytic expression.
    bool ok = true;
    const double cm = std::cos(head.margin);
    for (int i = 0; i < 4 && ok; ++i) {
      double en = 0.0, wn = 0.0, dot = 0.0;
      for (int c = 0; c < 3; ++c) {
        en += emb.at(i, c) * emb.at(i, c);
        wn += head.weight.at(labels[static_cast<std::size_t>(i)], c) *
              head.weight.at(labels[static_cast<std::size_t>(i)], c);
        dot += emb.at(i, c) * head.weight.at(labels[static_cast<std::size_t>(i)], c);
      }
      if (dot / std::sqrt(en * wn) <= -cm + 1e-3) ok = false;
    }
    if (!ok) continue;
    ++accepted;
    const double mine = arcface_loss(emb, head, labels).value;
    const double ref = arcface_transcription(emb, head.weight, labels, 30.0, 0.5);
    CHECK(std::abs(mine - ref) <= 1e-9);
  }
}

TEST_CASE("growing the margin never lowers the loss") {
  RngStream rng(41, 0);
  int accepted = 0;
  while (accepted < 100) {
    ArcFaceHead<double> head;
    head.scale = 10.0;
    head.margin = 0.0;
    head.weight = random_matrix(4, 3, -1.0, 1.0, rng);
    const Tensor<double> emb = random_matrix(3, 3, -1.0, 1.0, rng);
    const std::vector<int> labels{0, 1, 2};
    bool ok = true;
    for (int i = 0; i < 3 && ok; ++i) {
      double en = 0.0, wn = 0.0, dot = 0.0;
      for (int c = 0; c < 3; ++c) {
        en += emb.at(i, c) * emb.at(i, c);
        wn += head.weight.at(i, c) * head.weight.at(i, c);
        dot += emb.at(i, c) * head.weight.at(i, c);
      }
      // keep theta + 0.5 < pi
      if (dot / std::sqrt(en * wn) <= -std::cos(0.5) + 1e-3) ok = false;
    }
    if (!ok) continue;
    ++accepted;
    double prev = -std::numeric_limits<double>::infinity();
    for (double m : {0.0, 0.1, 0.25, 0.5}) {
      head.margin = m;
      const double v = arcface_loss(emb, head, labels).value;
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("arcface is scale invariant in the embeddings") {
  RngStream rng(43, 0);
  ArcFaceHead<double> head;
  head.scale = 30.0;
  head.margin = 0.5;
  head.weight = random_matrix(6, 4, -1.0, 1.0, rng);
  const Tensor<double> emb = random_matrix(5, 4, -1.0, 1.0, rng);
  const std::vector<int> labels{0, 1, 2, 3, 4};
  const double base = arcface_loss(emb, head, labels).value;
  for (double c : {0.5, 2.0, 10.0}) {
    Tensor<double> scaled = emb;
    for (auto& v : scaled.data) v *= c;
    CHECK(std::abs(arcface_loss(scaled, head, labels).value - base) <= 1e-9);
  }
}

TEST_CASE("arcface rejects zero-norm rows") {
  ArcFaceHead<double> head;
  head.weight = Tensor<double>({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor<double> emb({1, 2}, {0.0, 0.0});
  CHECK_THROWS_AS(arcface_loss(emb, head, {0}), std::invalid_argument);
  head.weight.data = {0.0, 0.0, 0.0, 1.0};
  Tensor<double> ok_emb({1, 2}, {1.0, 0.0});
  CHECK_THROWS_AS(arcface_loss(ok_emb, head, {0}), std::invalid_argument);
}

TEST_CASE("combined loss modes") {
  RngStream rng(47, 0);
  const Tensor<double> logits = random_matrix(4, 5, -2.0, 2.0, rng);
  const Tensor<double> emb = random_matrix(4, 3, -1.0, 1.0, rng);
  const std::vector<MixedTarget> targets{MixedTarget::single(0), MixedTarget::single(0),
                                         MixedTarget::single(1), MixedTarget::single(1)};
  CombinedLossConfig cfg;
  cfg.epsilon = 0.1;

  SUBCASE("ce mode equals ce_smoothed") {
    cfg.mode = LossMode::kCe;
    const auto combined = combined_loss(logits, emb, targets, nullptr, cfg);
    const auto plain = ce_smoothed(logits, targets, cfg.epsilon);
    CHECK(combined.value == plain.value);
    CHECK(combined.dlogits.data == plain.dlogits.data);
    CHECK(combined.dembeddings.shape.empty());
  }

  SUBCASE("lambda zero reduces to ce") {
    cfg.mode = LossMode::kCeTriplet;
    cfg.lambda_aux = 0.0;
    const auto combined = combined_loss(logits, emb, targets, nullptr, cfg);
    CHECK(combined.value == ce_smoothed(logits, targets, cfg.epsilon).value);
  }

  SUBCASE("arcface mode is additive") {
    ArcFaceHead<double> head;
    head.scale = 8.0;
    head.margin = 0.3;
    RngStream hr(48, 0);
    head.init(5, 3, hr);
    cfg.mode = LossMode::kCeArcface;
    cfg.lambda_aux = 1.0;
    const auto combined = combined_loss(logits, emb, targets, &head, cfg);
    const double ce = ce_smoothed(logits, targets, cfg.epsilon).value;
    const double arc = arcface_loss(emb, head, std::vector<int>{0, 0, 1, 1}).value;
    CHECK(std::abs(combined.value - (ce + arc)) <= 1e-12);
  }

  SUBCASE("metric modes need the embedding and head") {
    cfg.mode = LossMode::kCeArcface;
    CHECK_THROWS_AS(combined_loss(logits, emb, targets, nullptr, cfg), std::invalid_argument);
    cfg.mode = LossMode::kCeTriplet;
    CHECK_THROWS_AS(combined_loss(logits, Tensor<double>(), targets, nullptr, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("loss mode names round-trip") {
  CHECK(loss_mode_from_name("ce") == LossMode::kCe);
  CHECK(loss_mode_from_name("ce+triplet") == LossMode::kCeTriplet);
  CHECK(loss_mode_from_name("ce+arcface") == LossMode::kCeArcface);
  CHECK_THROWS_AS(loss_mode_from_name("focal"), std::invalid_argument);
  CHECK(std::string(loss_mode_name(LossMode::kCeTriplet)) == "ce+triplet");
}

TEST_CASE("gradient audits include a working negative control") {
  const auto broken = run_gradient_audits(123, /*inject_error=*/true);
  CHECK_FALSE(broken[0].pass);  // the perturbed ce audit must fail
}
