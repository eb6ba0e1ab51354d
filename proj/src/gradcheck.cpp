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

#include "trainkit/gradcheck.hpp"

#include <algorithm>

#include "trainkit/losses.hpp"
#include "trainkit/model.hpp"
#include "trainkit/rng.hpp"

namespace trainkit {
namespace {

constexpr int kPointsPerLoss = 50;
constexpr double kLossTol = 1e-4;
constexpr double kEndToEndTol = 1e-3;

Tensor<double> random_matrix(int n, int d, double lo, double hi, RngStream& rng) {
  Tensor<double> m({n, d});
  for (auto& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

std::vector<MixedTarget> random_targets(int n, int k, RngStream& rng) {
  std::vector<MixedTarget> targets;
  for (int i = 0; i < n; ++i) {
    const int a = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k)));
    if (rng.bernoulli(0.5)) {
      int b = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k - 1)));
      if (b >= a) ++b;
      const double w = rng.uniform(0.15, 0.85);
      targets.push_back(MixedTarget{{{a, w}, {b, 1.0 - w}}});
    } else {
      targets.push_back(MixedTarget::single(a));
    }
  }
  return targets;
}

double audit_ce(std::uint64_t seed, bool inject_error) {
  RngStream rng(seed, fnv1a("audit.ce"));
  double worst = 0.0;
  for (int pt = 0; pt < kPointsPerLoss; ++pt) {
    const int n = 2 + static_cast<int>(rng.next_below(6));
    const int k = 2 + static_cast<int>(rng.next_below(8));
    const double eps_choices[3] = {0.0, 0.1, 0.3};
    const double eps = eps_choices[rng.next_below(3)];
    Tensor<double> logits = random_matrix(n, k, -3.0, 3.0, rng);
    const auto targets = random_targets(n, k, rng);

    LossOutput<double> out = ce_smoothed(logits, targets, eps);
    if (inject_error && pt == 0) out.dlogits.data[0] += 1.0;
    for (std::size_t c = 0; c < logits.data.size(); ++c) {
      const double numeric = central_difference(
          [&] { return ce_smoothed(logits, targets, eps).value; }, logits.data[c]);
      worst = std::max(worst, grad_rel_err(out.dlogits.data[c], numeric));
    }
  }
  return worst;
}

double audit_triplet(std::uint64_t seed) {
  RngStream rng(seed, fnv1a("audit.triplet"));
  const TripletConfig cfg{0.3};
  double worst = 0.0;
  int accepted = 0;
  while (accepted < kPointsPerLoss) {
    const int n = 4 + static_cast<int>(rng.next_below(9));
    const int d = 2 + static_cast<int>(rng.next_below(5));
    const int k = 2 + static_cast<int>(rng.next_below(2));
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k))));
    // Each class needs two members for valid anchors.
    labels[0] = 0;
    labels[1] = 0;
    labels[2] = 1;
    labels[3] = 1;
    Tensor<double> emb = random_matrix(n, d, -1.0, 1.0, rng);

    // Non-degenerate points only: unique hardest picks and hinges away from
    // zero, so the subgradient is the true local derivative.
    const Tensor<double> dist = pairwise_euclidean(emb);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      double dpos = -1.0, dpos2 = -1.0, dneg = 1e30, dneg2 = 1e30;
      for (int j = 0; j < n; ++j) {
        if (j == a) continue;
        const double dj = dist.at(a, j);
        if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)]) {
          if (dj > dpos) {
            dpos2 = dpos;
            dpos = dj;
          } else {
            dpos2 = std::max(dpos2, dj);
          }
        } else {
          if (dj < dneg) {
            dneg2 = dneg;
            dneg = dj;
          } else {
            dneg2 = std::min(dneg2, dj);
          }
        }
      }
      if (dpos < 0.0 || dneg >= 1e29) continue;  // anchor skipped by the loss too
      if (dpos2 >= 0.0 && dpos - dpos2 < 1e-3) ok = false;
      if (dneg2 < 1e29 && dneg2 - dneg < 1e-3) ok = false;
      if (std::abs(cfg.margin + dpos - dneg) < 1e-3) ok = false;
      if (dpos < 1e-3) ok = false;
    }
    if (!ok) continue;
    ++accepted;

    const LossOutput<double> out = batch_hard_triplet(emb, labels, cfg);
    for (std::size_t c = 0; c < emb.data.size(); ++c) {
      const double numeric = central_difference(
          [&] { return batch_hard_triplet(emb, labels, cfg).value; }, emb.data[c]);
      worst = std::max(worst, grad_rel_err(out.dembeddings.data[c], numeric));
    }
  }
  return worst;
}

double audit_arcface(std::uint64_t seed) {
  RngStream rng(seed, fnv1a("audit.arcface"));
  double worst = 0.0;
  int accepted = 0;
  while (accepted < kPointsPerLoss) {
    const int n = 2 + static_cast<int>(rng.next_below(4));
    const int d = 3 + static_cast<int>(rng.next_below(4));
    const int k = 3 + static_cast<int>(rng.next_below(4));
    ArcFaceHead<double> head;
    head.scale = 8.0;
    head.margin = 0.5;
    head.weight = random_matrix(k, d, -1.0, 1.0, rng);
    Tensor<double> emb = random_matrix(n, d, -1.0, 1.0, rng);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k))));

    // Keep every cosine inside (-0.99, 0.99) and the target angle clear of
    // both the clamp and the theta + m = pi fallback boundary.
    bool ok = true;
    const double cm = std::cos(head.margin);
    for (int i = 0; i < n && ok; ++i) {
      double ei = 0.0;
      for (int c = 0; c < d; ++c) ei += emb.at(i, c) * emb.at(i, c);
      ei = std::sqrt(ei);
      for (int j = 0; j < k && ok; ++j) {
        double wj = 0.0, dot = 0.0;
        for (int c = 0; c < d; ++c) {
          wj += head.weight.at(j, c) * head.weight.at(j, c);
          dot += emb.at(i, c) * head.weight.at(j, c);
        }
        const double cosv = dot / (ei * std::sqrt(wj));
        if (std::abs(cosv) > 0.99) ok = false;
        if (j == labels[static_cast<std::size_t>(i)] && std::abs(cosv + cm) < 2e-2) ok = false;
      }
    }
    if (!ok) continue;
    ++accepted;

    const LossOutput<double> out = arcface_loss(emb, head, labels);
    for (std::size_t c = 0; c < emb.data.size(); ++c) {
      const double numeric = central_difference(
          [&] { return arcface_loss(emb, head, labels).value; }, emb.data[c]);
      worst = std::max(worst, grad_rel_err(out.dembeddings.data[c], numeric));
    }
    for (std::size_t c = 0; c < head.weight.data.size(); ++c) {
      const double numeric = central_difference(
          [&] { return arcface_loss(emb, head, labels).value; }, head.weight.data[c]);
      worst = std::max(worst, grad_rel_err(out.dhead_weight.data[c], numeric));
    }
  }
  return worst;
}

// End-to-end: model forward -> combined loss, finite differences at sampled
// parameter coordinates on a fixed 4-sample batch.
double audit_end_to_end(std::uint64_t seed, LossMode mode) {
  RngStream rng(seed, hash_combine(fnv1a("audit.model"), static_cast<std::uint64_t>(mode)));
  const int size = 16, k = 5, dim = 8, batch = 4;
  ModelConfig mc{dim, k, size};
  TinyBackbone<double> model(mc, seed ^ 0x5eedULL);

  std::vector<ImageF32> inputs;
  for (int i = 0; i < batch; ++i) {
    ImageF32 img(size, size);
    for (auto& v : img.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    inputs.push_back(std::move(img));
  }
  // Two samples per class so triplet anchors are valid.
  std::vector<MixedTarget> targets{MixedTarget::single(0), MixedTarget{{{0, 0.7}, {2, 0.3}}},
                                   MixedTarget::single(1), MixedTarget{{{1, 0.6}, {3, 0.4}}}};

  ArcFaceHead<double> head;
  head.scale = 8.0;
  head.margin = 0.5;
  RngStream head_rng(seed, fnv1a("audit.model.head"));
  head.init(k, dim, head_rng);

  CombinedLossConfig loss_cfg;
  loss_cfg.mode = mode;
  loss_cfg.epsilon = 0.1;
  loss_cfg.lambda_aux = 1.0;
  loss_cfg.triplet.margin = 0.3;

  const bool arc = mode == LossMode::kCeArcface;
  auto value = [&]() {
    Tensor<double> emb, logits;
    model.forward(inputs, emb, logits);
    return combined_loss(logits, emb, targets, arc ? &head : nullptr, loss_cfg).value;
  };

  Tensor<double> emb, logits;
  model.forward_train(inputs, emb, logits);
  const LossOutput<double> loss =
      combined_loss(logits, emb, targets, arc ? &head : nullptr, loss_cfg);
  std::vector<Tensor<double>> grads = model.backward(loss.dlogits, loss.dembeddings);
  std::vector<Tensor<double>*> live;
  for (NamedTensor<double>* p : model.params()) live.push_back(&p->tensor);
  if (arc) {
    grads.push_back(loss.dhead_weight);
    live.push_back(&head.weight);
  }

  double worst = 0.0;
  for (int probe = 0; probe < kPointsPerLoss; ++probe) {
    const auto ti = rng.next_below(static_cast<std::uint32_t>(live.size()));
    const auto ci = rng.next_below(static_cast<std::uint32_t>(live[ti]->data.size()));
    const double numeric = central_difference(value, live[ti]->data[ci]);
    worst = std::max(worst, grad_rel_err(grads[ti].data[ci], numeric));
  }
  return worst;
}

}  // namespace

std::vector<AuditResult> run_gradient_audits(std::uint64_t seed, bool inject_error) {
  std::vector<AuditResult> results;
  auto add = [&results](std::string name, double err, double tol) {
    results.push_back({std::move(name), err, tol, err <= tol});
  };
  add("ce_smoothed", audit_ce(seed, inject_error), kLossTol);
  add("batch_hard_triplet", audit_triplet(seed), kLossTol);
  add("arcface", audit_arcface(seed), kLossTol);
  add("model+ce", audit_end_to_end(seed, LossMode::kCe), kEndToEndTol);
  add("model+ce+triplet", audit_end_to_end(seed, LossMode::kCeTriplet), kEndToEndTol);
  add("model+ce+arcface", audit_end_to_end(seed, LossMode::kCeArcface), kEndToEndTol);
  return results;
}

}  // namespace trainkit
