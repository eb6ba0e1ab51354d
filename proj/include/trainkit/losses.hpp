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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "trainkit/mixed_target.hpp"
#include "trainkit/rng.hpp"
#include "trainkit/tensor.hpp"

namespace trainkit {

/// q_y = 1 - eps, q_{i != y} = eps / (K - 1).
std::vector<double> smooth_targets(int y, int num_classes, double eps);

/// Smoothed target distribution for a mixed label: each component class is
/// smoothed, then the components are mixed by their weights (linear in q).
std::vector<double> mixed_smoothed_row(const MixedTarget& target, int num_classes, double eps);

enum class LossMode { kCe, kCeTriplet, kCeArcface };

LossMode loss_mode_from_name(const std::string& name);
const char* loss_mode_name(LossMode mode);

/// Scalar loss value plus gradients for every differentiable input that
/// participates in the active mode. Unused gradients stay empty.
template <typename T>
struct LossOutput {
  double value = 0.0;
  Tensor<T> dlogits;      // N x K
  Tensor<T> dembeddings;  // N x D
  Tensor<T> dhead_weight; // K x D (arcface only)
  int valid_anchors = 0;  // triplet bookkeeping
};

namespace detail {

template <typename T>
void check_finite(const Tensor<T>& t, const char* what) {
  for (const T& v : t.data) {
    if (!std::isfinite(static_cast<double>(v)))
      throw std::invalid_argument(std::string(what) + ": non-finite input value");
  }
}

// Row-wise stable softmax plus log-sum-exp; probs may alias nothing.
template <typename T>
double row_log_softmax(const T* logits, int k, std::vector<double>& probs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(logits[j]));
  double sum = 0.0;
  probs.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    probs[j] = std::exp(static_cast<double>(logits[j]) - mx);
    sum += probs[j];
  }
  for (int j = 0; j < k; ++j) probs[j] /= sum;
  return mx + std::log(sum);  // log sum exp
}

}  // namespace detail

/// Label-smoothed cross entropy over a batch of logits, batch-averaged.
/// Gradient with respect to the logits is (softmax - q) / N.
template <typename T>
LossOutput<T> ce_smoothed(const Tensor<T>& logits, const std::vector<MixedTarget>& targets,
                          double eps) {
  if (logits.shape.size() != 2) throw std::invalid_argument("ce_smoothed: logits must be N x K");
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(targets.size()) != n)
    throw std::invalid_argument("ce_smoothed: target count does not match batch");
  detail::check_finite(logits, "ce_smoothed");

  LossOutput<T> out;
  out.dlogits = Tensor<T>({n, k});
  std::vector<double> probs;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> q = mixed_smoothed_row(targets[i], k, eps);
    const double lse = detail::row_log_softmax(logits.row(i), k, probs);
    double row_loss = 0.0;
    for (int j = 0; j < k; ++j) {
      // -sum_j q_j * log p_j, with log p_j = z_j - lse
      row_loss += q[j] * (lse - static_cast<double>(logits.at(i, j)));
      out.dlogits.at(i, j) = static_cast<T>((probs[j] - q[j]) / n);
    }
    total += row_loss;
  }
  out.value = total / n;
  return out;
}

/// Convenience overload for plain hard labels.
template <typename T>
LossOutput<T> ce_smoothed(const Tensor<T>& logits, const std::vector<int>& labels, double eps) {
  std::vector<MixedTarget> targets;
  targets.reserve(labels.size());
  for (int y : labels) targets.push_back(MixedTarget::single(y));
  return ce_smoothed(logits, targets, eps);
}

/// Symmetric N x N Euclidean distance matrix with a zero diagonal, computed
/// through the squared-distance expansion clamped at zero.
template <typename T>
Tensor<double> pairwise_euclidean(const Tensor<T>& emb) {
  if (emb.shape.size() != 2) throw std::invalid_argument("pairwise_euclidean: emb must be N x D");
  detail::check_finite(emb, "pairwise_euclidean");
  const int n = emb.dim(0), d = emb.dim(1);
  std::vector<double> sqnorm(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = static_cast<double>(emb.at(i, j));
      s += v * v;
    }
    sqnorm[static_cast<std::size_t>(i)] = s;
  }
  Tensor<double> dist({n, n});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double dot = 0.0;
      for (int c = 0; c < d; ++c)
        dot += static_cast<double>(emb.at(i, c)) * static_cast<double>(emb.at(j, c));
      const double sq = sqnorm[static_cast<std::size_t>(i)] +
                        sqnorm[static_cast<std::size_t>(j)] - 2.0 * dot;
      dist.at(i, j) = std::sqrt(std::max(sq, 0.0));
    }
  }
  return dist;
}

struct TripletConfig {
  double margin = 0.3;
};

/// Batch-hard triplet loss: per anchor, hinge on margin + hardest-positive
/// distance - hardest-negative distance, averaged over anchors that have at
/// least one positive and one negative. Ties in the hardest selection go to
/// the lowest row index; subgradients are zero where the hinge is inactive.
template <typename T>
LossOutput<T> batch_hard_triplet(const Tensor<T>& emb, const std::vector<int>& labels,
                                 const TripletConfig& cfg) {
  if (emb.shape.size() != 2) throw std::invalid_argument("triplet: emb must be N x D");
  const int n = emb.dim(0), d = emb.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("triplet: label count does not match batch");
  if (cfg.margin < 0.0) throw std::invalid_argument("triplet: margin must be >= 0");

  const Tensor<double> dist = pairwise_euclidean(emb);

  struct Pick {
    int pos = -1, neg = -1;
    double dpos = 0.0, dneg = 0.0;
  };
  std::vector<Pick> picks(static_cast<std::size_t>(n));
  int valid = 0;
  for (int a = 0; a < n; ++a) {
    Pick p;
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[j] == labels[a]) {
        if (p.pos < 0 || dist.at(a, j) > p.dpos) {
          p.pos = j;
          p.dpos = dist.at(a, j);
        }
      } else {
        if (p.neg < 0 || dist.at(a, j) < p.dneg) {
          p.neg = j;
          p.dneg = dist.at(a, j);
        }
      }
    }
    if (p.pos >= 0 && p.neg >= 0) ++valid;
    picks[static_cast<std::size_t>(a)] = p;
  }
  if (valid == 0)
    throw std::runtime_error(
        "triplet: degenerate batch, no anchor has both a positive and a negative "
        "(use class-balanced sampling)");

  LossOutput<T> out;
  out.valid_anchors = valid;
  out.dembeddings = Tensor<T>({n, d});
  Tensor<double> grad({n, d});
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    const Pick& p = picks[static_cast<std::size_t>(a)];
    if (p.pos < 0 || p.neg < 0) continue;
    const double hinge = cfg.margin + p.dpos - p.dneg;
    if (hinge <= 0.0) continue;
    total += hinge;
    // d||x_a - x_b|| / dx_a = (x_a - x_b) / d, zero at coincident points.
    const double inv = 1.0 / valid;
    if (p.dpos > 0.0) {
      for (int c = 0; c < d; ++c) {
        const double g = inv * (static_cast<double>(emb.at(a, c)) -
                                static_cast<double>(emb.at(p.pos, c))) / p.dpos;
        grad.at(a, c) += g;
        grad.at(p.pos, c) -= g;
      }
    }
    if (p.dneg > 0.0) {
      for (int c = 0; c < d; ++c) {
        const double g = inv * (static_cast<double>(emb.at(a, c)) -
                                static_cast<double>(emb.at(p.neg, c))) / p.dneg;
        grad.at(a, c) -= g;
        grad.at(p.neg, c) += g;
      }
    }
  }
  out.value = total / valid;
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    out.dembeddings.data[i] = static_cast<T>(grad.data[i]);
  return out;
}

/// Classifier weights for the additive-angular-margin loss. Rows and
/// embeddings are L2-normalized at evaluation time; the weight matrix is
/// trained jointly with the model.
template <typename T>
struct ArcFaceHead {
  Tensor<T> weight;  // K x D
  double scale = 30.0;
  double margin = 0.5;

  void init(int num_classes, int dim, RngStream& rng) {
    weight = Tensor<T>({num_classes, dim});
    const double lim = std::sqrt(1.0 / dim);
    for (auto& v : weight.data) v = static_cast<T>(rng.uniform(-lim, lim));
  }
  void validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("arcface: scale must be > 0");
    if (margin < 0.0 || margin >= std::numbers::pi)
      throw std::invalid_argument("arcface: margin must be in [0, pi)");
  }
};

namespace detail {

inline constexpr double kCosClamp = 1e-7;

template <typename T>
std::vector<double> row_norms(const Tensor<T>& m, const char* what) {
  const int n = m.dim(0), d = m.dim(1);
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = static_cast<double>(m.at(i, j));
      s += v * v;
    }
    const double nrm = std::sqrt(s);
    if (!(nrm > 1e-12))
      throw std::invalid_argument(std::string(what) + ": zero-norm row " + std::to_string(i));
    norms[static_cast<std::size_t>(i)] = nrm;
  }
  return norms;
}

struct ArcCos {
  double cos = 0.0;   // clamped cosine
  bool clamped = false;
};

}  // namespace detail

/// Cosine logits with the additive angular margin applied to each sample's
/// target column, scaled by s. When theta_y + m would pass pi, the monotonic
/// fallback cos(theta_y) - m*sin(m) is substituted.
template <typename T>
Tensor<T> arcface_logits(const Tensor<T>& emb, const ArcFaceHead<T>& head,
                         const std::vector<int>& labels) {
  head.validate();
  detail::check_finite(emb, "arcface");
  const int n = emb.dim(0), d = emb.dim(1), k = head.weight.dim(0);
  if (head.weight.dim(1) != d) throw std::invalid_argument("arcface: weight/embedding dim mismatch");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("arcface: label count does not match batch");
  const std::vector<double> en = detail::row_norms(emb, "arcface embeddings");
  const std::vector<double> wn = detail::row_norms(head.weight, "arcface weights");
  const double cm = std::cos(head.margin), sm = std::sin(head.margin);

  Tensor<T> out({n, k});
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw std::invalid_argument("arcface: label out of range");
    for (int j = 0; j < k; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c)
        dot += static_cast<double>(emb.at(i, c)) * static_cast<double>(head.weight.at(j, c));
      const double cosv = std::clamp(dot / (en[static_cast<std::size_t>(i)] *
                                            wn[static_cast<std::size_t>(j)]),
                                     -1.0 + detail::kCosClamp, 1.0 - detail::kCosClamp);
      double psi = cosv;
      if (j == labels[i]) {
        const double sinv = std::sqrt(1.0 - cosv * cosv);
        // theta + m < pi  <=>  cos(theta) > cos(pi - m)
        if (cosv > -cm) {
          psi = cosv * cm - sinv * sm;
        } else {
          psi = cosv - head.margin * sm;
        }
      }
      out.at(i, j) = static_cast<T>(head.scale * psi);
    }
  }
  return out;
}

/// Softmax cross entropy over the margin-adjusted logits, with analytic
/// gradients through the normalization for both the embeddings and the head
/// weights (zero through the cosine clamp when it is active).
template <typename T>
LossOutput<T> arcface_loss(const Tensor<T>& emb, const ArcFaceHead<T>& head,
                           const std::vector<int>& labels) {
  head.validate();
  detail::check_finite(emb, "arcface");
  const int n = emb.dim(0), d = emb.dim(1), k = head.weight.dim(0);
  if (head.weight.dim(1) != d) throw std::invalid_argument("arcface: weight/embedding dim mismatch");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("arcface: label count does not match batch");
  const std::vector<double> en = detail::row_norms(emb, "arcface embeddings");
  const std::vector<double> wn = detail::row_norms(head.weight, "arcface weights");
  const double cm = std::cos(head.margin), sm = std::sin(head.margin);

  LossOutput<T> out;
  out.dembeddings = Tensor<T>({n, d});
  out.dhead_weight = Tensor<T>({k, d});
  Tensor<double> demb({n, d});
  Tensor<double> dw({k, d});

  std::vector<double> cosrow(static_cast<std::size_t>(k));
  std::vector<char> clamprow(static_cast<std::size_t>(k));
  std::vector<double> logits(static_cast<std::size_t>(k));
  std::vector<double> probs;
  double total = 0.0;

  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k) throw std::invalid_argument("arcface: label out of range");
    const double ni = en[static_cast<std::size_t>(i)];
    for (int j = 0; j < k; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c)
        dot += static_cast<double>(emb.at(i, c)) * static_cast<double>(head.weight.at(j, c));
      const double raw = dot / (ni * wn[static_cast<std::size_t>(j)]);
      const double cosv = std::clamp(raw, -1.0 + detail::kCosClamp, 1.0 - detail::kCosClamp);
      cosrow[static_cast<std::size_t>(j)] = cosv;
      clamprow[static_cast<std::size_t>(j)] = (raw != cosv);
      double psi = cosv;
      if (j == y) {
        const double sinv = std::sqrt(1.0 - cosv * cosv);
        psi = (cosv > -cm) ? cosv * cm - sinv * sm : cosv - head.margin * sm;
      }
      logits[static_cast<std::size_t>(j)] = head.scale * psi;
    }
    const double lse = detail::row_log_softmax(logits.data(), k, probs);
    total += lse - logits[static_cast<std::size_t>(y)];

    for (int j = 0; j < k; ++j) {
      const double glogit = (probs[static_cast<std::size_t>(j)] - (j == y ? 1.0 : 0.0)) / n;
      if (glogit == 0.0) continue;
      const double cosv = cosrow[static_cast<std::size_t>(j)];
      double dpsi_dcos = 1.0;
      if (j == y && cosv > -cm) {
        const double sinv = std::sqrt(1.0 - cosv * cosv);
        // d cos(theta + m) / d cos(theta) = sin(theta + m) / sin(theta)
        dpsi_dcos = cm + sm * cosv / sinv;
      }
      double a = glogit * head.scale * dpsi_dcos;
      if (clamprow[static_cast<std::size_t>(j)]) a = 0.0;
      if (a == 0.0) continue;
      const double nj = wn[static_cast<std::size_t>(j)];
      for (int c = 0; c < d; ++c) {
        const double eh = static_cast<double>(emb.at(i, c)) / ni;
        const double wh = static_cast<double>(head.weight.at(j, c)) / nj;
        demb.at(i, c) += a * (wh - cosv * eh) / ni;
        dw.at(j, c) += a * (eh - cosv * wh) / nj;
      }
    }
  }
  out.value = total / n;
  for (std::size_t i = 0; i < demb.data.size(); ++i)
    out.dembeddings.data[i] = static_cast<T>(demb.data[i]);
  for (std::size_t i = 0; i < dw.data.size(); ++i)
    out.dhead_weight.data[i] = static_cast<T>(dw.data[i]);
  return out;
}

struct CombinedLossConfig {
  LossMode mode = LossMode::kCe;
  double epsilon = 0.1;
  double lambda_aux = 1.0;
  TripletConfig triplet;
  // ArcFace scale/margin live on the head itself.

  void validate() const {
    if (epsilon < 0.0 || epsilon >= 1.0)
      throw std::invalid_argument("loss: epsilon must be in [0, 1)");
    if (lambda_aux < 0.0) throw std::invalid_argument("loss: lambda_aux must be >= 0");
    if (triplet.margin < 0.0) throw std::invalid_argument("loss: margin must be >= 0");
  }
};

/// total = ce_smoothed + lambda_aux * (triplet | arcface | 0). The auxiliary
/// losses use each sample's dominant class as its hard label. `head` is
/// required for the arcface mode and ignored otherwise.
template <typename T>
LossOutput<T> combined_loss(const Tensor<T>& logits, const Tensor<T>& emb,
                            const std::vector<MixedTarget>& targets,
                            const ArcFaceHead<T>* head, const CombinedLossConfig& cfg) {
  cfg.validate();
  LossOutput<T> ce = ce_smoothed(logits, targets, cfg.epsilon);
  if (cfg.mode == LossMode::kCe) return ce;

  if (emb.shape.empty())
    throw std::invalid_argument("loss: metric modes need the embedding output");
  std::vector<int> hard;
  hard.reserve(targets.size());
  for (const MixedTarget& t : targets) hard.push_back(t.dominant_class());

  LossOutput<T> aux;
  if (cfg.mode == LossMode::kCeTriplet) {
    aux = batch_hard_triplet(emb, hard, cfg.triplet);
  } else {
    if (head == nullptr) throw std::invalid_argument("loss: arcface mode needs a head");
    aux = arcface_loss(emb, *head, hard);
  }

  LossOutput<T> out;
  out.value = ce.value + cfg.lambda_aux * aux.value;
  out.dlogits = std::move(ce.dlogits);
  out.valid_anchors = aux.valid_anchors;
  out.dembeddings = std::move(aux.dembeddings);
  for (auto& v : out.dembeddings.data) v = static_cast<T>(cfg.lambda_aux * v);
  if (cfg.mode == LossMode::kCeArcface) {
    out.dhead_weight = std::move(aux.dhead_weight);
    for (auto& v : out.dhead_weight.data) v = static_cast<T>(cfg.lambda_aux * v);
  }
  return out;
}

template <typename T>
LossOutput<T> combined_loss(const Tensor<T>& logits, const Tensor<T>& emb,
                            const std::vector<MixedTarget>& targets, std::nullptr_t,
                            const CombinedLossConfig& cfg) {
  return combined_loss(logits, emb, targets, static_cast<const ArcFaceHead<T>*>(nullptr), cfg);
}

}  // namespace trainkit
