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
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "trainkit/image.hpp"
#include "trainkit/rng.hpp"
#include "trainkit/tensor.hpp"

namespace trainkit {

/// Dense H x W x C activation map.
template <typename T>
struct FeatMap {
  int h = 0, w = 0, c = 0;
  std::vector<T> v;

  void reset(int hh, int ww, int cc) {
    h = hh;
    w = ww;
    c = cc;
    v.assign(static_cast<std::size_t>(hh) * ww * cc, T(0));
  }
  T* px(int y, int x) { return v.data() + (static_cast<std::size_t>(y) * w + x) * c; }
  const T* px(int y, int x) const { return v.data() + (static_cast<std::size_t>(y) * w + x) * c; }
};

struct ModelConfig {
  int embed_dim = 64;
  int classes = 10;
  int input_size = 32;  // training resolution; forward accepts any size >= 8

  void validate() const {
    if (embed_dim < 1 || classes < 1) throw std::invalid_argument("model: dims must be >= 1");
    if (input_size < 8) throw std::invalid_argument("model: input_size must be >= 8");
  }
};

/// Three 3x3 conv + rectifier + 2x2 average-pool blocks (16, 32, 64
/// channels), global average pooling, a linear embedding head and a linear
/// classifier on top of the embedding. Gradients are hand-derived; the
/// rectifier uses subgradient 0 at the kink. Forward runs on any input of at
/// least 8x8, which is what lets multi-scale evaluation reuse one model.
template <typename T>
class TinyBackbone {
 public:
  static constexpr int kC1 = 16, kC2 = 32, kC3 = 64;

  TinyBackbone(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    conv1_w_ = {"conv1.weight", Tensor<T>({kC1, 3, 3, 3})};
    conv1_b_ = {"conv1.bias", Tensor<T>({kC1})};
    conv2_w_ = {"conv2.weight", Tensor<T>({kC2, 3, 3, kC1})};
    conv2_b_ = {"conv2.bias", Tensor<T>({kC2})};
    conv3_w_ = {"conv3.weight", Tensor<T>({kC3, 3, 3, kC2})};
    conv3_b_ = {"conv3.bias", Tensor<T>({kC3})};
    embed_w_ = {"embed.weight", Tensor<T>({cfg_.embed_dim, kC3})};
    embed_b_ = {"embed.bias", Tensor<T>({cfg_.embed_dim})};
    cls_w_ = {"classifier.weight", Tensor<T>({cfg_.classes, cfg_.embed_dim})};
    cls_b_ = {"classifier.bias", Tensor<T>({cfg_.classes})};
    // Fan-in-scaled uniform init (rectifier gain), zero biases. One stream
    // per tensor so layouts can change without reshuffling everything.
    int stream = 0;
    for (NamedTensor<T>* p : params()) {
      RngStream rng(seed, static_cast<std::uint64_t>(stream++));
      if (p->name.ends_with(".bias")) continue;
      const int fan_in = fan_in_of(*p);
      const double lim = std::sqrt(6.0 / fan_in);
      for (T& v : p->tensor.data) v = static_cast<T>(rng.uniform(-lim, lim));
    }
  }

  const ModelConfig& config() const { return cfg_; }

  std::vector<NamedTensor<T>*> params() {
    return {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_, &conv3_w_,
            &conv3_b_, &embed_w_, &embed_b_, &cls_w_,   &cls_b_};
  }
  std::vector<const NamedTensor<T>*> params() const {
    return {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_, &conv3_w_,
            &conv3_b_, &embed_w_, &embed_b_, &cls_w_,   &cls_b_};
  }
  std::vector<ParamRef<T>> param_refs() {
    std::vector<ParamRef<T>> refs;
    for (NamedTensor<T>* p : params()) refs.push_back({p->name, &p->tensor});
    return refs;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const NamedTensor<T>* p : params()) n += p->tensor.size();
    return n;
  }

  std::uint64_t param_digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const NamedTensor<T>* p : params())
      h = hash_combine(h, fnv1a(p->tensor.data.data(), p->tensor.data.size() * sizeof(T)));
    return h;
  }

  /// Inference forward: no state is touched.
  void forward(const std::vector<ImageF32>& batch, Tensor<T>& emb, Tensor<T>& logits) const {
    emb = Tensor<T>({static_cast<int>(batch.size()), cfg_.embed_dim});
    logits = Tensor<T>({static_cast<int>(batch.size()), cfg_.classes});
    SampleCache scratch;
    for (std::size_t i = 0; i < batch.size(); ++i)
      forward_one(batch[i], scratch, emb.row(static_cast<int>(i)),
                  logits.row(static_cast<int>(i)));
  }

  /// Training forward: keeps per-sample activations for backward().
  void forward_train(const std::vector<ImageF32>& batch, Tensor<T>& emb, Tensor<T>& logits) {
    caches_.resize(batch.size());
    emb = Tensor<T>({static_cast<int>(batch.size()), cfg_.embed_dim});
    logits = Tensor<T>({static_cast<int>(batch.size()), cfg_.classes});
    for (std::size_t i = 0; i < batch.size(); ++i)
      forward_one(batch[i], caches_[i], emb.row(static_cast<int>(i)),
                  logits.row(static_cast<int>(i)));
  }

  /// Parameter gradients in params() order. Both upstream paths (classifier
  /// logits and the raw embedding) merge at the embedding before flowing into
  /// the trunk. `demb` may be empty when no auxiliary loss is active.
  std::vector<Tensor<T>> backward(const Tensor<T>& dlogits, const Tensor<T>& demb) {
    const int n = static_cast<int>(caches_.size());
    if (n == 0) throw std::logic_error("backward: no cached forward pass");
    if (dlogits.dim(0) != n || dlogits.dim(1) != cfg_.classes)
      throw std::invalid_argument("backward: dlogits shape mismatch");
    const bool have_demb = !demb.shape.empty();
    if (have_demb && (demb.dim(0) != n || demb.dim(1) != cfg_.embed_dim))
      throw std::invalid_argument("backward: demb shape mismatch");

    std::vector<Tensor<T>> grads;
    for (NamedTensor<T>* p : params()) grads.emplace_back(p->tensor.shape);
    Tensor<T>& g_c1w = grads[0];
    Tensor<T>& g_c1b = grads[1];
    Tensor<T>& g_c2w = grads[2];
    Tensor<T>& g_c2b = grads[3];
    Tensor<T>& g_c3w = grads[4];
    Tensor<T>& g_c3b = grads[5];
    Tensor<T>& g_ew = grads[6];
    Tensor<T>& g_eb = grads[7];
    Tensor<T>& g_cw = grads[8];
    Tensor<T>& g_cb = grads[9];

    std::vector<T> de(static_cast<std::size_t>(cfg_.embed_dim));
    std::vector<T> dg(kC3);
    FeatMap<T> dp3, dr3, dp2, dr2, dp1, dr1;
    for (int i = 0; i < n; ++i) {
      SampleCache& sc = caches_[static_cast<std::size_t>(i)];
      // classifier head
      std::fill(de.begin(), de.end(), T(0));
      if (have_demb)
        for (int j = 0; j < cfg_.embed_dim; ++j) de[static_cast<std::size_t>(j)] = demb.at(i, j);
      linear_back(sc.e.data(), cfg_.embed_dim, cls_w_.tensor, dlogits.row(i), cfg_.classes, g_cw,
                  g_cb, de.data());
      // embedding head
      std::fill(dg.begin(), dg.end(), T(0));
      linear_back(sc.g.data(), kC3, embed_w_.tensor, de.data(), cfg_.embed_dim, g_ew, g_eb,
                  dg.data());
      gap_back(dg.data(), sc.p3, dp3);
      avgpool2_back(dp3, sc.r3, dr3);
      relu_back(dr3, sc.r3);
      conv3x3_back(sc.p2, conv3_w_.tensor, dr3, g_c3w, g_c3b, &dp2);
      avgpool2_back(dp2, sc.r2, dr2);
      relu_back(dr2, sc.r2);
      conv3x3_back(sc.p1, conv2_w_.tensor, dr2, g_c2w, g_c2b, &dp1);
      avgpool2_back(dp1, sc.r1, dr1);
      relu_back(dr1, sc.r1);
      conv3x3_back(sc.x0, conv1_w_.tensor, dr1, g_c1w, g_c1b, nullptr);
    }
    return grads;
  }

  /// Row-wise softmax of the logits; each row sums to 1.
  Tensor<double> predict_probs(const std::vector<ImageF32>& batch) const {
    Tensor<T> emb, logits;
    forward(batch, emb, logits);
    Tensor<double> probs({logits.dim(0), logits.dim(1)});
    for (int i = 0; i < logits.dim(0); ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < logits.dim(1); ++j)
        mx = std::max(mx, static_cast<double>(logits.at(i, j)));
      double sum = 0.0;
      for (int j = 0; j < logits.dim(1); ++j) {
        probs.at(i, j) = std::exp(static_cast<double>(logits.at(i, j)) - mx);
        sum += probs.at(i, j);
      }
      for (int j = 0; j < logits.dim(1); ++j) probs.at(i, j) /= sum;
    }
    return probs;
  }

 private:
  struct SampleCache {
    FeatMap<T> x0, r1, p1, r2, p2, r3, p3;
    std::vector<T> g, e;
  };

  static int fan_in_of(const NamedTensor<T>& p) {
    const auto& s = p.tensor.shape;
    if (s.size() == 4) return s[1] * s[2] * s[3];  // conv: kh * kw * cin
    return s[1];                                   // linear: in features
  }

  void forward_one(const ImageF32& img, SampleCache& sc, T* emb_out, T* logits_out) const {
    if (img.width < 8 || img.height < 8)
      throw std::invalid_argument("model: input must be at least 8x8");
    sc.x0.reset(img.height, img.width, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      sc.x0.v[i] = static_cast<T>(img.pixels[i]);
    conv3x3(sc.x0, conv1_w_.tensor, conv1_b_.tensor, sc.r1);
    relu(sc.r1);
    avgpool2(sc.r1, sc.p1);
    conv3x3(sc.p1, conv2_w_.tensor, conv2_b_.tensor, sc.r2);
    relu(sc.r2);
    avgpool2(sc.r2, sc.p2);
    conv3x3(sc.p2, conv3_w_.tensor, conv3_b_.tensor, sc.r3);
    relu(sc.r3);
    avgpool2(sc.r3, sc.p3);
    sc.g.assign(kC3, T(0));
    gap(sc.p3, sc.g.data());
    sc.e.assign(static_cast<std::size_t>(cfg_.embed_dim), T(0));
    linear(sc.g.data(), kC3, embed_w_.tensor, embed_b_.tensor, sc.e.data(), cfg_.embed_dim);
    linear(sc.e.data(), cfg_.embed_dim, cls_w_.tensor, cls_b_.tensor, logits_out, cfg_.classes);
    for (int j = 0; j < cfg_.embed_dim; ++j) emb_out[j] = sc.e[static_cast<std::size_t>(j)];
  }

  static void conv3x3(const FeatMap<T>& in, const Tensor<T>& w, const Tensor<T>& b,
                      FeatMap<T>& out) {
    const int H = in.h, W = in.w, cin = in.c, cout = w.dim(0);
    out.reset(H, W, cout);
    const T* wd = w.data.data();
    const std::size_t co_stride = static_cast<std::size_t>(9) * cin;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        T* op = out.px(y, x);
        for (int co = 0; co < cout; ++co) op[co] = b.data[static_cast<std::size_t>(co)];
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            const T* ip = in.px(yy, xx);
            const std::size_t tap = (static_cast<std::size_t>(dy + 1) * 3 + (dx + 1)) * cin;
            for (int co = 0; co < cout; ++co) {
              const T* wp = wd + co * co_stride + tap;
              T acc = T(0);
              for (int ci = 0; ci < cin; ++ci) acc += ip[ci] * wp[ci];
              op[co] += acc;
            }
          }
        }
      }
    }
  }

  static void conv3x3_back(const FeatMap<T>& in, const Tensor<T>& w, const FeatMap<T>& dout,
                           Tensor<T>& gw, Tensor<T>& gb, FeatMap<T>* din) {
    const int H = in.h, W = in.w, cin = in.c, cout = dout.c;
    if (din) din->reset(H, W, cin);
    const T* wd = w.data.data();
    const std::size_t co_stride = static_cast<std::size_t>(9) * cin;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const T* gp = dout.px(y, x);
        for (int co = 0; co < cout; ++co) gb.data[static_cast<std::size_t>(co)] += gp[co];
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= H) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= W) continue;
            const T* ip = in.px(yy, xx);
            T* dip = din ? din->px(yy, xx) : nullptr;
            const std::size_t tap = (static_cast<std::size_t>(dy + 1) * 3 + (dx + 1)) * cin;
            for (int co = 0; co < cout; ++co) {
              const T g = gp[co];
              if (g == T(0)) continue;
              T* gwp = gw.data.data() + co * co_stride + tap;
              const T* wp = wd + co * co_stride + tap;
              if (dip) {
                for (int ci = 0; ci < cin; ++ci) {
                  gwp[ci] += g * ip[ci];
                  dip[ci] += g * wp[ci];
                }
              } else {
                for (int ci = 0; ci < cin; ++ci) gwp[ci] += g * ip[ci];
              }
            }
          }
        }
      }
    }
  }

  static void relu(FeatMap<T>& m) {
    for (T& v : m.v)
      if (v < T(0)) v = T(0);
  }

  // dr holds the upstream gradient; zero it wherever the activation was zero.
  static void relu_back(FeatMap<T>& dr, const FeatMap<T>& r) {
    for (std::size_t i = 0; i < dr.v.size(); ++i)
      if (r.v[i] <= T(0)) dr.v[i] = T(0);
  }

  static void avgpool2(const FeatMap<T>& in, FeatMap<T>& out) {
    const int oh = in.h / 2, ow = in.w / 2;
    out.reset(oh, ow, in.c);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        T* op = out.px(y, x);
        const T* a = in.px(2 * y, 2 * x);
        const T* b = in.px(2 * y, 2 * x + 1);
        const T* c = in.px(2 * y + 1, 2 * x);
        const T* d = in.px(2 * y + 1, 2 * x + 1);
        for (int ch = 0; ch < in.c; ++ch)
          op[ch] = (a[ch] + b[ch] + c[ch] + d[ch]) * static_cast<T>(0.25);
      }
    }
  }

  // Remainder rows/columns (odd sizes) receive zero gradient.
  static void avgpool2_back(const FeatMap<T>& dout, const FeatMap<T>& in_like, FeatMap<T>& din) {
    din.reset(in_like.h, in_like.w, in_like.c);
    for (int y = 0; y < dout.h; ++y) {
      for (int x = 0; x < dout.w; ++x) {
        const T* gp = dout.px(y, x);
        T* a = din.px(2 * y, 2 * x);
        T* b = din.px(2 * y, 2 * x + 1);
        T* c = din.px(2 * y + 1, 2 * x);
        T* d = din.px(2 * y + 1, 2 * x + 1);
        for (int ch = 0; ch < dout.c; ++ch) {
          const T g = gp[ch] * static_cast<T>(0.25);
          a[ch] = g;
          b[ch] = g;
          c[ch] = g;
          d[ch] = g;
        }
      }
    }
  }

  static void gap(const FeatMap<T>& in, T* out) {
    const T inv = static_cast<T>(1.0 / (static_cast<double>(in.h) * in.w));
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        const T* ip = in.px(y, x);
        for (int ch = 0; ch < in.c; ++ch) out[ch] += ip[ch];
      }
    }
    for (int ch = 0; ch < in.c; ++ch) out[ch] *= inv;
  }

  static void gap_back(const T* dout, const FeatMap<T>& in_like, FeatMap<T>& din) {
    din.reset(in_like.h, in_like.w, in_like.c);
    const T inv = static_cast<T>(1.0 / (static_cast<double>(in_like.h) * in_like.w));
    for (int y = 0; y < in_like.h; ++y) {
      for (int x = 0; x < in_like.w; ++x) {
        T* dp = din.px(y, x);
        for (int ch = 0; ch < in_like.c; ++ch) dp[ch] = dout[ch] * inv;
      }
    }
  }

  static void linear(const T* in, int n_in, const Tensor<T>& w, const Tensor<T>& b, T* out,
                     int n_out) {
    for (int o = 0; o < n_out; ++o) {
      const T* row = w.data.data() + static_cast<std::size_t>(o) * n_in;
      T acc = b.data[static_cast<std::size_t>(o)];
      for (int i = 0; i < n_in; ++i) acc += row[i] * in[i];
      out[o] = acc;
    }
  }

  static void linear_back(const T* in, int n_in, const Tensor<T>& w, const T* dout, int n_out,
                          Tensor<T>& gw, Tensor<T>& gb, T* din) {
    for (int o = 0; o < n_out; ++o) {
      const T g = dout[o];
      gb.data[static_cast<std::size_t>(o)] += g;
      T* gr = gw.data.data() + static_cast<std::size_t>(o) * n_in;
      const T* wr = w.data.data() + static_cast<std::size_t>(o) * n_in;
      for (int i = 0; i < n_in; ++i) {
        gr[i] += g * in[i];
        if (din) din[i] += g * wr[i];
      }
    }
  }

  ModelConfig cfg_;
  NamedTensor<T> conv1_w_, conv1_b_, conv2_w_, conv2_b_, conv3_w_, conv3_b_;
  NamedTensor<T> embed_w_, embed_b_, cls_w_, cls_b_;
  std::vector<SampleCache> caches_;
};

}  // namespace trainkit
