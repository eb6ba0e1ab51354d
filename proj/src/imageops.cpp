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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trainkit {

int MixedTarget::dominant_class() const {
  int best = entries.empty() ? 0 : entries[0].cls;
  double bw = entries.empty() ? 0.0 : entries[0].weight;
  for (const Entry& e : entries) {
    if (e.weight > bw) {
      bw = e.weight;
      best = e.cls;
    }
  }
  return best;
}

void MixedTarget::validate(int num_classes) const {
  if (entries.empty() || entries.size() > 2)
    throw std::invalid_argument("target: must hold one or two entries");
  double sum = 0.0;
  for (const Entry& e : entries) {
    if (e.cls < 0 || e.cls >= num_classes) throw std::invalid_argument("target: class out of range");
    if (!(e.weight > 0.0)) throw std::invalid_argument("target: weights must be positive");
    sum += e.weight;
  }
  if (entries.size() == 2 && entries[0].cls == entries[1].cls)
    throw std::invalid_argument("target: classes must be distinct");
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("target: weights must sum to 1");
}

void AugmentConfig::validate() const {
  if (out_size < 1) throw std::invalid_argument("augment: out_size must be >= 1");
  if (!(area_lo > 0.0 && area_lo <= area_hi && area_hi <= 1.0))
    throw std::invalid_argument("augment: need 0 < area_lo <= area_hi <= 1");
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi))
    throw std::invalid_argument("augment: need 0 < aspect_lo <= aspect_hi");
  if (flip_prob < 0.0 || flip_prob > 1.0) throw std::invalid_argument("augment: flip_prob in [0,1]");
  if (cutmix_prob < 0.0 || cutmix_prob > 1.0)
    throw std::invalid_argument("augment: cutmix_prob in [0,1]");
  if (!(cutmix_alpha > 0.0)) throw std::invalid_argument("augment: cutmix_alpha must be > 0");
  norm.validate();
  if (policy) policy->validate();
}

Rect sample_crop_rect(int width, int height, double area_lo, double area_hi, double aspect_lo,
                      double aspect_hi, RngStream& rng) {
  if (width < 1 || height < 1) throw std::invalid_argument("sample_crop_rect: empty image");
  const double total = static_cast<double>(width) * height;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double frac = rng.uniform(area_lo, area_hi);
    const double aspect = rng.uniform(aspect_lo, aspect_hi);
    const double target = frac * total;
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w < 1 || h < 1 || w > width || h > height) continue;
    // Rounding may push the realized area outside the requested range.
    const double realized = static_cast<double>(w) * h / total;
    if (realized < area_lo || realized > area_hi) continue;
    const int x = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(width - w + 1)));
    const int y = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(height - h + 1)));
    return Rect{x, y, x + w, y + h};
  }
  // Largest centered crop with the aspect ratio clamped into range.
  int w = width, h = height;
  const double ar = static_cast<double>(width) / height;
  if (ar > aspect_hi) {
    w = std::max(1, static_cast<int>(std::lround(height * aspect_hi)));
  } else if (ar < aspect_lo) {
    h = std::max(1, static_cast<int>(std::lround(width / aspect_lo)));
  }
  const int x = (width - w) / 2, y = (height - h) / 2;
  return Rect{x, y, x + w, y + h};
}

ImageU8 random_resized_crop(const ImageU8& img, double area_lo, double area_hi,
                            double aspect_lo, double aspect_hi, int out_size, RngStream& rng) {
  if (img.empty()) throw std::invalid_argument("random_resized_crop: empty image");
  const Rect r =
      sample_crop_rect(img.width, img.height, area_lo, area_hi, aspect_lo, aspect_hi, rng);
  return resize_bilinear(crop(img, r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0), out_size, out_size);
}

ImageU8 random_resized_crop(const ImageU8& img, const AugmentConfig& cfg, RngStream& rng) {
  return random_resized_crop(img, cfg.area_lo, cfg.area_hi, cfg.aspect_lo, cfg.aspect_hi,
                             cfg.out_size, rng);
}

namespace {

constexpr double kFill = 128.0;

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

double fetch_or_fill(const ImageU8& img, int x, int y, int c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return kFill;
  return img.at(x, y, c);
}

// Inverse affine warp: output pixel centers map through the 2x3 matrix to
// source coordinates (half-pixel convention), sampled bilinearly with
// mid-gray fill. An identity matrix reproduces the input bitwise.
ImageU8 affine_bilinear(const ImageU8& img, double m00, double m01, double m02, double m10,
                        double m11, double m12) {
  ImageU8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const double oy = y + 0.5;
    for (int x = 0; x < img.width; ++x) {
      const double ox = x + 0.5;
      const double sx = m00 * ox + m01 * oy + m02 - 0.5;
      const double sy = m10 * ox + m11 * oy + m12 - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double tx = sx - x0;
      const double ty = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double v =
            (1.0 - ty) * ((1.0 - tx) * fetch_or_fill(img, x0, y0, c) +
                          tx * fetch_or_fill(img, x0 + 1, y0, c)) +
            ty * ((1.0 - tx) * fetch_or_fill(img, x0, y0 + 1, c) +
                  tx * fetch_or_fill(img, x0 + 1, y0 + 1, c));
        out.at(x, y, c) = clamp_round(v);
      }
    }
  }
  return out;
}

int luminance(const ImageU8& img, int x, int y) {
  return (299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2)) / 1000;
}

// out = degenerate + factor * (img - degenerate), per pixel/channel.
ImageU8 blend_with(const ImageU8& img, const ImageU8& degenerate, double factor) {
  ImageU8 out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double d = degenerate.pixels[i];
    out.pixels[i] = clamp_round(d + factor * (img.pixels[i] - d));
  }
  return out;
}

ImageU8 grayscale_image(const ImageU8& img) {
  ImageU8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto l = static_cast<std::uint8_t>(luminance(img, x, y));
      out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = l;
    }
  }
  return out;
}

ImageU8 mean_gray_image(const ImageU8& img) {
  double sum = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += luminance(img, x, y);
  const auto mean = static_cast<std::uint8_t>(
      std::clamp<long>(std::lround(sum / (static_cast<double>(img.width) * img.height)), 0, 255));
  return ImageU8(img.width, img.height, mean);
}

// 3x3 smoothing kernel (center weight 5, sum 13); border pixels are copied.
ImageU8 smoothed_image(const ImageU8& img) {
  ImageU8 out = img;
  for (int y = 1; y + 1 < img.height; ++y) {
    for (int x = 1; x + 1 < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        int acc = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += img.at(x + dx, y + dy, c);
        acc += 4 * img.at(x, y, c);
        out.at(x, y, c) = clamp_round(acc / 13.0);
      }
    }
  }
  return out;
}

ImageU8 autocontrast_image(const ImageU8& img) {
  ImageU8 out = img;
  for (int c = 0; c < 3; ++c) {
    int lo = 255, hi = 0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int v = img.at(x, y, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (hi <= lo) continue;
    const double scale = 255.0 / (hi - lo);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(x, y, c) = clamp_round((img.at(x, y, c) - lo) * scale);
  }
  return out;
}

ImageU8 equalize_image(const ImageU8& img) {
  ImageU8 out = img;
  const long total = static_cast<long>(img.width) * img.height;
  for (int c = 0; c < 3; ++c) {
    long hist[256] = {};
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) ++hist[img.at(x, y, c)];
    int last = 0;
    for (int i = 0; i < 256; ++i)
      if (hist[i] > 0) last = i;
    const long step = (total - hist[last]) / 255;
    if (step == 0) continue;  // effectively constant channel
    std::uint8_t lut[256];
    long n = step / 2;
    for (int i = 0; i < 256; ++i) {
      lut[i] = static_cast<std::uint8_t>(std::min<long>(n / step, 255));
      n += hist[i];
    }
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.at(x, y, c) = lut[img.at(x, y, c)];
  }
  return out;
}

}  // namespace

ImageU8 apply_op(OpKind kind, double magnitude, const ImageU8& img, RngStream& rng) {
  switch (kind) {
    case OpKind::kShearX: {
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      return affine_bilinear(img, 1.0, s * magnitude, 0.0, 0.0, 1.0, 0.0);
    }
    case OpKind::kShearY: {
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      return affine_bilinear(img, 1.0, 0.0, 0.0, s * magnitude, 1.0, 0.0);
    }
    case OpKind::kTranslateX: {
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      return affine_bilinear(img, 1.0, 0.0, s * magnitude * img.width, 0.0, 1.0, 0.0);
    }
    case OpKind::kTranslateY: {
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      return affine_bilinear(img, 1.0, 0.0, 0.0, 0.0, 1.0, s * magnitude * img.height);
    }
    case OpKind::kRotate: {
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double th = s * magnitude * std::numbers::pi / 180.0;
      const double ct = std::cos(th), st = std::sin(th);
      const double cx = img.width / 2.0, cy = img.height / 2.0;
      return affine_bilinear(img, ct, st, cx - ct * cx - st * cy, -st, ct,
                             cy + st * cx - ct * cy);
    }
    case OpKind::kColor:
      return blend_with(img, grayscale_image(img), magnitude);
    case OpKind::kContrast:
      return blend_with(img, mean_gray_image(img), magnitude);
    case OpKind::kBrightness:
      return blend_with(img, ImageU8(img.width, img.height, 0), magnitude);
    case OpKind::kSharpness:
      return blend_with(img, smoothed_image(img), magnitude);
    case OpKind::kPosterize: {
      const int bits = static_cast<int>(magnitude);
      const auto mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
      ImageU8 out = img;
      for (auto& v : out.pixels) v = static_cast<std::uint8_t>(v & mask);
      return out;
    }
    case OpKind::kSolarize: {
      ImageU8 out = img;
      for (auto& v : out.pixels)
        if (v >= magnitude) v = static_cast<std::uint8_t>(255 - v);
      return out;
    }
    case OpKind::kInvert: {
      ImageU8 out = img;
      for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
      return out;
    }
    case OpKind::kAutoContrast:
      return autocontrast_image(img);
    case OpKind::kEqualize:
      return equalize_image(img);
  }
  throw std::logic_error("apply_op: unhandled op kind");
}

ImageU8 autoaugment(const ImageU8& img, const PolicyTable& table, RngStream& rng) {
  const auto idx = rng.next_below(static_cast<std::uint32_t>(table.subs.size()));
  const SubPolicy& sp = table.subs[idx];
  ImageU8 out = img;
  for (const OpSlot& slot : sp.slots) {
    if (rng.bernoulli(slot.prob)) out = apply_op(slot.kind, slot.magnitude, out, rng);
  }
  return out;
}

CutmixResult cutmix_apply(const ImageF32& base, int base_cls, const ImageF32& donor,
                          int donor_cls, Rect patch) {
  if (base.width != donor.width || base.height != donor.height)
    throw std::invalid_argument("cutmix: base and donor dimensions differ");
  CutmixResult res;
  res.image = base;
  res.patch = patch;
  for (int y = patch.y0; y < patch.y1; ++y)
    for (int x = patch.x0; x < patch.x1; ++x)
      for (int c = 0; c < 3; ++c) res.image.at(x, y, c) = donor.at(x, y, c);
  const int area = patch.area();
  const double donor_w =
      static_cast<double>(area) / (static_cast<double>(base.width) * base.height);
  if (area == 0 || base_cls == donor_cls) {
    res.target = MixedTarget::single(base_cls);
  } else if (donor_w >= 1.0) {
    res.target = MixedTarget::single(donor_cls);
  } else {
    res.target.entries = {{base_cls, 1.0 - donor_w}, {donor_cls, donor_w}};
  }
  return res;
}

CutmixResult cutmix_pair(const ImageF32& base, int base_cls, const ImageF32& donor,
                         int donor_cls, double alpha, RngStream& rng,
                         std::optional<double> forced_lambda) {
  if (base.width != donor.width || base.height != donor.height)
    throw std::invalid_argument("cutmix: base and donor dimensions differ");
  const double lam =
      std::clamp(forced_lambda ? *forced_lambda : rng.beta(alpha, alpha), 0.0, 1.0);
  const int W = base.width, H = base.height;
  const double cut = std::sqrt(1.0 - lam);
  const int rw = static_cast<int>(std::lround(W * cut));
  const int rh = static_cast<int>(std::lround(H * cut));
  const int cx = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(W)));
  const int cy = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(H)));
  Rect patch;
  if (rw >= W && rh >= H) {
    patch = {0, 0, W, H};  // lambda == 0: the whole image is replaced
  } else {
    const int x0 = cx - rw / 2;
    const int y0 = cy - rh / 2;
    patch.x0 = std::clamp(x0, 0, W);
    patch.x1 = std::clamp(x0 + rw, 0, W);
    patch.y0 = std::clamp(y0, 0, H);
    patch.y1 = std::clamp(y0 + rh, 0, H);
  }
  return cutmix_apply(base, base_cls, donor, donor_cls, patch);
}

ImageF32 augment_steps14(const ImageU8& img, const AugmentConfig& cfg, RngStream& rng,
                         std::vector<std::string>* trace) {
  ImageU8 s = random_resized_crop(img, cfg, rng);
  if (trace) trace->push_back("crop");
  if (rng.bernoulli(cfg.flip_prob)) s = hflip(s);
  if (trace) trace->push_back("flip");
  if (cfg.policy) {
    s = autoaugment(s, *cfg.policy, rng);
    if (trace) trace->push_back("autoaugment");
  }
  ImageF32 f = normalize(s, cfg.norm);
  if (trace) trace->push_back("normalize");
  return f;
}

AugmentedSample augment_train(const ImageU8& img, int cls, const ImageU8& partner,
                              int partner_cls, const AugmentConfig& cfg, RngStream& rng,
                              RngStream& partner_rng, std::vector<std::string>* trace,
                              std::optional<double> forced_lambda) {
  ImageF32 a = augment_steps14(img, cfg, rng, trace);
  if (rng.bernoulli(cfg.cutmix_prob)) {
    const ImageF32 b = augment_steps14(partner, cfg, partner_rng, nullptr);
    CutmixResult r = cutmix_pair(a, cls, b, partner_cls, cfg.cutmix_alpha, rng, forced_lambda);
    if (trace) trace->push_back("cutmix");
    return {std::move(r.image), std::move(r.target)};
  }
  if (trace) trace->push_back("cutmix");
  return {std::move(a), MixedTarget::single(cls)};
}

}  // namespace trainkit
