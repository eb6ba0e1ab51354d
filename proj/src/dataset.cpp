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

#include "trainkit/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "trainkit/rng.hpp"

namespace fs = std::filesystem;

namespace trainkit {

std::vector<int> Manifest::labels() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const ManifestEntry& e : entries) out.push_back(e.cls);
  return out;
}

std::vector<std::string> Manifest::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const ManifestEntry& e : entries) out.push_back(e.id);
  return out;
}

Manifest load_manifest(const std::string& csv_path, int num_classes) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("manifest: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line) || line != "sample_id,path,class_index")
    throw std::runtime_error("manifest: " + csv_path +
                             " must start with the 'sample_id,path,class_index' header");
  Manifest m;
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = csv_path + ":" + std::to_string(lineno);
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = (c1 == std::string::npos) ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("manifest: malformed row at " + where);
    ManifestEntry e;
    e.id = line.substr(0, c1);
    e.path = line.substr(c1 + 1, c2 - c1 - 1);
    if (e.id.empty() || e.id.find_first_of(" \t") != std::string::npos)
      throw std::runtime_error("manifest: bad sample id at " + where);
    if (e.path.empty()) throw std::runtime_error("manifest: empty path at " + where);
    try {
      e.cls = std::stoi(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("manifest: bad class index at " + where);
    }
    if (e.cls < 0 || e.cls >= num_classes)
      throw std::runtime_error("manifest: class index out of [0," + std::to_string(num_classes) +
                               ") at " + where);
    if (!seen.insert(e.id).second)
      throw std::runtime_error("manifest: duplicate sample id '" + e.id + "' at " + where);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw std::runtime_error("manifest: " + csv_path + " has no rows");
  return m;
}

void save_manifest(const std::string& csv_path, const Manifest& manifest) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("manifest: cannot write " + csv_path);
  out << "sample_id,path,class_index\n";
  for (const ManifestEntry& e : manifest.entries)
    out << e.id << ',' << e.path << ',' << e.cls << '\n';
  if (!out) throw std::runtime_error("manifest: short write to " + csv_path);
}

std::vector<ImageU8> load_images(const Manifest& manifest, const std::string& base_dir) {
  std::vector<ImageU8> images;
  images.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries)
    images.push_back(load_ppm((fs::path(base_dir) / e.path).string()));
  return images;
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("synthetic: need at least 2 classes");
  if (train_per_class < 1 || val_per_class < 1)
    throw std::invalid_argument("synthetic: per-class counts must be >= 1");
  if (size < 8) throw std::invalid_argument("synthetic: size must be >= 8");
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hue_color(int hue, int num_hues) {
  // Evenly spaced hues, moderate saturation/value.
  const double h = 360.0 * hue / num_hues;
  const double s = 0.65, v = 0.82;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = v - c;
  return {255.0 * (r + m), 255.0 * (g + m), 255.0 * (b + m)};
}

ImageU8 synth_image(int cls, int num_hues, int size, RngStream& rng) {
  const Rgb fore = hue_color(cls % num_hues, num_hues);
  const int motif = (cls / num_hues) % 2;  // 0 stripes, 1 checkers
  const double brightness = rng.uniform(0.85, 1.15);

  // Stripe parameters
  const double period = rng.uniform(0.18, 0.30) * size;
  const double angle = rng.uniform(-0.45, 0.45);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  // Checker parameters
  const double cell = rng.uniform(0.13, 0.20) * size;
  const double ox = rng.uniform(0.0, cell), oy = rng.uniform(0.0, cell);

  ImageU8 img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      bool on;
      if (motif == 0) {
        const double t = (x * ca + y * sa) * 2.0 * std::numbers::pi / period + phase;
        on = std::sin(t) > 0.0;
      } else {
        const long cx = static_cast<long>(std::floor((x + ox) / cell));
        const long cy = static_cast<long>(std::floor((y + oy) / cell));
        on = ((cx + cy) & 1) != 0;
      }
      const double mix = on ? 1.0 : 0.35;
      const double base[3] = {fore.r * mix * brightness, fore.g * mix * brightness,
                              fore.b * mix * brightness};
      for (int c = 0; c < 3; ++c) {
        const double noisy = base[c] + rng.uniform(-18.0, 18.0);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(noisy), 0, 255));
      }
    }
  }
  return img;
}

}  // namespace

void make_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  const fs::path root(out_dir);
  fs::create_directories(root / "images");
  const int num_hues = std::max(1, (spec.classes + 1) / 2);

  const struct {
    const char* name;
    int per_class;
  } splits[2] = {{"train", spec.train_per_class}, {"val", spec.val_per_class}};

  for (const auto& split : splits) {
    Manifest m;
    for (int cls = 0; cls < spec.classes; ++cls) {
      for (int i = 0; i < split.per_class; ++i) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s_c%02d_%04d", split.name, cls, i);
        RngStream rng(spec.seed, hash_combine(fnv1a(split.name),
                                              hash_combine(static_cast<std::uint64_t>(cls),
                                                           static_cast<std::uint64_t>(i))));
        const ImageU8 img = synth_image(cls, num_hues, spec.size, rng);
        const std::string rel = std::string("images/") + id + ".ppm";
        save_ppm(img, (root / rel).string());
        m.entries.push_back({id, rel, cls});
      }
    }
    save_manifest((root / (std::string(split.name) + ".csv")).string(), m);
  }
}

double nearest_centroid_baseline(const std::string& dataset_dir, int num_classes) {
  const fs::path root(dataset_dir);
  const Manifest train = load_manifest((root / "train.csv").string(), num_classes);
  const Manifest val = load_manifest((root / "val.csv").string(), num_classes);

  auto mean_rgb = [&](const ManifestEntry& e) {
    const ImageU8 img = load_ppm((root / e.path).string());
    double acc[3] = {0, 0, 0};
    const std::size_t pixels = img.pixels.size() / 3;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) acc[i % 3] += img.pixels[i];
    return std::array<double, 3>{acc[0] / pixels, acc[1] / pixels, acc[2] / pixels};
  };

  std::vector<std::array<double, 3>> centroid(static_cast<std::size_t>(num_classes), {0, 0, 0});
  std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
  for (const ManifestEntry& e : train.entries) {
    const auto m = mean_rgb(e);
    for (int c = 0; c < 3; ++c) centroid[static_cast<std::size_t>(e.cls)][static_cast<std::size_t>(c)] += m[static_cast<std::size_t>(c)];
    ++count[static_cast<std::size_t>(e.cls)];
  }
  for (int k = 0; k < num_classes; ++k) {
    if (count[static_cast<std::size_t>(k)] == 0)
      throw std::runtime_error("baseline: class " + std::to_string(k) + " has no training rows");
    for (auto& v : centroid[static_cast<std::size_t>(k)]) v /= count[static_cast<std::size_t>(k)];
  }

  int correct = 0;
  for (const ManifestEntry& e : val.entries) {
    const auto m = mean_rgb(e);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes; ++k) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double diff = m[static_cast<std::size_t>(c)] - centroid[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best == e.cls) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(val.entries.size());
}

}  // namespace trainkit
