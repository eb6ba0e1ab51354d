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

#include "trainkit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace trainkit {

void TtaConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("tta: scale list must not be empty");
  for (int s : scales)
    if (s < 8) throw std::invalid_argument("tta: scales must be >= 8");
  if (!(area_lo > 0.0 && area_lo <= area_hi && area_hi <= 1.0))
    throw std::invalid_argument("tta: need 0 < area_lo <= area_hi <= 1");
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi))
    throw std::invalid_argument("tta: need 0 < aspect_lo <= aspect_hi");
}

ImageU8 center_view(const ImageU8& img, int scale) {
  if (img.empty()) throw std::invalid_argument("tta: empty image");
  const int target_short = static_cast<int>(std::lround(scale * 256.0 / 224.0));
  ImageU8 resized;
  if (img.width <= img.height) {
    const int nh = std::max(
        target_short,
        static_cast<int>(std::lround(img.height * static_cast<double>(target_short) / img.width)));
    resized = (img.width == target_short && img.height == nh)
                  ? img
                  : resize_bilinear(img, target_short, nh);
  } else {
    const int nw = std::max(
        target_short,
        static_cast<int>(std::lround(img.width * static_cast<double>(target_short) / img.height)));
    resized = (img.height == target_short && img.width == nw)
                  ? img
                  : resize_bilinear(img, nw, target_short);
  }
  return crop(resized, (resized.width - scale) / 2, (resized.height - scale) / 2, scale, scale);
}

std::vector<TtaView> make_views(const ImageU8& img, const TtaConfig& cfg,
                                std::uint64_t run_seed, std::uint64_t image_id) {
  cfg.validate();
  if (img.empty()) throw std::invalid_argument("tta: empty image");
  std::vector<TtaView> views;
  views.reserve(cfg.scales.size() * 2);
  for (int scale : cfg.scales) {
    TtaView a;
    a.scale = scale;
    a.method = CropMethod::kCenterAfterShortEdgeResize;
    a.image = to_f32(center_view(img, scale));
    views.push_back(std::move(a));

    RngStream rng(run_seed, hash_combine(image_id, static_cast<std::uint64_t>(scale)));
    TtaView b;
    b.scale = scale;
    b.method = CropMethod::kRandomArea80to100;
    b.image = to_f32(random_resized_crop(img, cfg.area_lo, cfg.area_hi, cfg.aspect_lo,
                                         cfg.aspect_hi, scale, rng));
    views.push_back(std::move(b));
  }
  return views;
}

void ProbMatrix::validate() const {
  if (classes < 1) throw std::invalid_argument("probmatrix: needs at least one class");
  if (values.size() != ids.size() * static_cast<std::size_t>(classes))
    throw std::invalid_argument("probmatrix: value count does not match ids x classes");
  for (int i = 0; i < rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) {
      const double v = at(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("probmatrix: entry out of [0,1] for id " + ids[i]);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("probmatrix: row for id " + ids[i] + " does not sum to 1");
  }
}

namespace {
std::string fuse_mismatch_message(const ProbMatrix& a, const ProbMatrix& b, std::size_t which);
}  // namespace

ProbMatrix fuse(const std::vector<ProbMatrix>& members) {
  if (members.empty()) throw std::invalid_argument("fuse: no matrices given");
  const ProbMatrix& first = members[0];
  ProbMatrix out;
  out.classes = first.classes;
  out.ids = first.ids;
  out.values.assign(first.values.size(), 0.0);

  for (std::size_t m = 0; m < members.size(); ++m) {
    const ProbMatrix& pm = members[m];
    if (pm.classes != first.classes)
      throw std::invalid_argument("fuse: member " + std::to_string(m) +
                                  " has a different class count");
    if (pm.ids.size() != first.ids.size())
      throw std::invalid_argument(fuse_mismatch_message(first, pm, m));
    std::unordered_map<std::string, int> index;
    index.reserve(pm.ids.size());
    for (int i = 0; i < pm.rows(); ++i) index.emplace(pm.ids[static_cast<std::size_t>(i)], i);
    for (int i = 0; i < out.rows(); ++i) {
      const auto it = index.find(out.ids[static_cast<std::size_t>(i)]);
      if (it == index.end()) throw std::invalid_argument(fuse_mismatch_message(first, pm, m));
      for (int j = 0; j < out.classes; ++j) out.at(i, j) += pm.at(it->second, j);
    }
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : out.values) v *= inv;
  return out;
}

namespace {

std::string fuse_mismatch_message(const ProbMatrix& a, const ProbMatrix& b, std::size_t which) {
  std::vector<std::string> ida = a.ids, idb = b.ids;
  std::sort(ida.begin(), ida.end());
  std::sort(idb.begin(), idb.end());
  std::vector<std::string> only_a, only_b;
  std::set_difference(ida.begin(), ida.end(), idb.begin(), idb.end(), std::back_inserter(only_a));
  std::set_difference(idb.begin(), idb.end(), ida.begin(), ida.end(), std::back_inserter(only_b));
  std::ostringstream msg;
  msg << "fuse: member " << which << " sample ids differ from member 0;";
  msg << " missing " << only_a.size() << ", extra " << only_b.size();
  auto list = [&msg](const char* label, const std::vector<std::string>& v) {
    if (v.empty()) return;
    msg << "; " << label << ":";
    for (std::size_t i = 0; i < v.size() && i < 8; ++i) msg << ' ' << v[i];
    if (v.size() > 8) msg << " ...";
  };
  list("only in member 0", only_a);
  list("only in this member", only_b);
  return msg.str();
}

}  // namespace

double top1_accuracy(const ProbMatrix& probs, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != probs.rows())
    throw std::invalid_argument("top1: label count does not match matrix rows");
  if (probs.rows() == 0) throw std::invalid_argument("top1: empty matrix");
  int correct = 0;
  for (int i = 0; i < probs.rows(); ++i) {
    int arg = 0;
    for (int j = 1; j < probs.classes; ++j)
      if (probs.at(i, j) > probs.at(i, arg)) arg = j;  // ties keep the lowest index
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / probs.rows();
}

void write_probmatrix(const std::string& path, const ProbMatrix& pm) {
  pm.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("probmatrix: cannot write " + path);
  out << "probmatrix v1 " << pm.rows() << ' ' << pm.classes << '\n';
  char buf[32];
  for (int i = 0; i < pm.rows(); ++i) {
    out << pm.ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < pm.classes; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", pm.at(i, j));
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("probmatrix: short write to " + path);
}

ProbMatrix read_probmatrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("probmatrix: cannot open " + path);
  std::string word, version;
  int n = 0, k = 0;
  in >> word >> version >> n >> k;
  if (!in || word != "probmatrix" || version != "v1")
    throw std::runtime_error("probmatrix: " + path + " has a bad header");
  if (n < 0 || k < 1) throw std::runtime_error("probmatrix: " + path + " has bad dimensions");
  ProbMatrix pm;
  pm.classes = k;
  pm.ids.reserve(static_cast<std::size_t>(n));
  pm.values.reserve(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i) {
    std::string id;
    if (!(in >> id)) throw std::runtime_error("probmatrix: " + path + " truncated at row " +
                                              std::to_string(i));
    pm.ids.push_back(id);
    for (int j = 0; j < k; ++j) {
      double v = 0.0;
      if (!(in >> v))
        throw std::runtime_error("probmatrix: " + path + " truncated in row for id " + id);
      pm.values.push_back(v);
    }
    // Printing at 9 significant digits lets a row sum drift by a few 1e-10
    // per entry; fold that back out. Anything beyond print rounding is a
    // malformed file.
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += pm.at(i, j);
    if (std::abs(sum - 1.0) > 1e-7)
      throw std::runtime_error("probmatrix: " + path + " row for id " + id +
                               " does not sum to 1");
    for (int j = 0; j < k; ++j) pm.at(i, j) /= sum;
  }
  pm.validate();
  return pm;
}

}  // namespace trainkit
