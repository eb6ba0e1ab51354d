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

#include "trainkit/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "trainkit/rng.hpp"

namespace trainkit {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects an unsigned integer, got '" + v + "'");
  }
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v, int n) {
  const auto parts = split_commas(v);
  if (n > 0 && static_cast<int>(parts.size()) != n)
    throw std::invalid_argument("config: " + key + " expects " + std::to_string(n) + " values");
  std::vector<double> out;
  for (const auto& p : parts) out.push_back(parse_double(key, p));
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  const auto parts = split_commas(v);
  if (parts.empty()) throw std::invalid_argument("config: " + key + " expects at least one value");
  std::vector<int> out;
  for (const auto& p : parts) out.push_back(parse_int(key, p));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "data.dir") {
    cfg.data_dir = value;
  } else if (key == "data.classes") {
    cfg.classes = parse_int(key, value);
  } else if (key == "model.embed_dim") {
    cfg.embed_dim = parse_int(key, value);
  } else if (key == "train.batch_size") {
    cfg.batch_size = parse_int(key, value);
  } else if (key == "train.epochs") {
    cfg.epochs = parse_int(key, value);
  } else if (key == "train.loss") {
    cfg.loss_mode = loss_mode_from_name(value);
  } else if (key == "train.pk_p") {
    cfg.pk_p = parse_int(key, value);
  } else if (key == "train.pk_q") {
    cfg.pk_q = parse_int(key, value);
  } else if (key == "loss.epsilon") {
    cfg.epsilon = parse_double(key, value);
  } else if (key == "loss.triplet_margin") {
    cfg.triplet_margin = parse_double(key, value);
  } else if (key == "loss.arcface_scale") {
    cfg.arcface_scale = parse_double(key, value);
  } else if (key == "loss.arcface_margin") {
    cfg.arcface_margin = parse_double(key, value);
  } else if (key == "loss.lambda_aux") {
    cfg.lambda_aux = parse_double(key, value);
  } else if (key == "optim.base_lr") {
    cfg.base_lr = parse_double(key, value);
  } else if (key == "optim.momentum") {
    cfg.momentum = parse_double(key, value);
  } else if (key == "optim.weight_decay") {
    cfg.weight_decay = parse_double(key, value);
  } else if (key == "optim.warmup_epochs") {
    cfg.warmup_epochs = parse_double(key, value);
  } else if (key == "aug.out_size") {
    cfg.out_size = parse_int(key, value);
  } else if (key == "aug.area") {
    const auto v = parse_double_list(key, value, 2);
    cfg.area_lo = v[0];
    cfg.area_hi = v[1];
  } else if (key == "aug.aspect") {
    const auto v = parse_double_list(key, value, 2);
    cfg.aspect_lo = v[0];
    cfg.aspect_hi = v[1];
  } else if (key == "aug.flip_prob") {
    cfg.flip_prob = parse_double(key, value);
  } else if (key == "aug.cutmix_prob") {
    cfg.cutmix_prob = parse_double(key, value);
  } else if (key == "aug.cutmix_alpha") {
    cfg.cutmix_alpha = parse_double(key, value);
  } else if (key == "aug.mean") {
    cfg.mean = parse_double_list(key, value, 3);
  } else if (key == "aug.std") {
    cfg.stddev = parse_double_list(key, value, 3);
  } else if (key == "aug.policy") {
    cfg.policy_path = value;
  } else if (key == "tta.scales") {
    cfg.tta_scales = parse_int_list(key, value);
  } else if (key == "tta.area") {
    const auto v = parse_double_list(key, value, 2);
    cfg.tta_area_lo = v[0];
    cfg.tta_area_hi = v[1];
  } else if (key == "run.seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "run.threads") {
    cfg.threads = parse_int(key, value);
  } else if (key == "run.out") {
    cfg.out_dir = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) +
                                  " is not a key=value line");
    apply_config_line(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("config: data.classes must be >= 2");
  if (embed_dim < 1) throw std::invalid_argument("config: model.embed_dim must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: train.batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("config: train.epochs must be >= 0");
  if (pk_p < 2 || pk_q < 2)
    throw std::invalid_argument("config: train.pk_p and train.pk_q must be >= 2");
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("config: loss.epsilon must be in [0, 1)");
  if (triplet_margin < 0.0) throw std::invalid_argument("config: loss.triplet_margin must be >= 0");
  if (!(arcface_scale > 0.0)) throw std::invalid_argument("config: loss.arcface_scale must be > 0");
  if (arcface_margin < 0.0 || arcface_margin >= 3.141592653589793)
    throw std::invalid_argument("config: loss.arcface_margin must be in [0, pi)");
  if (lambda_aux < 0.0) throw std::invalid_argument("config: loss.lambda_aux must be >= 0");
  if (!(base_lr > 0.0)) throw std::invalid_argument("config: optim.base_lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("config: optim.momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("config: optim.weight_decay must be >= 0");
  if (warmup_epochs < 0.0) throw std::invalid_argument("config: optim.warmup_epochs must be >= 0");
  if (out_size < 8) throw std::invalid_argument("config: aug.out_size must be >= 8");
  if (!(area_lo > 0.0 && area_lo <= area_hi && area_hi <= 1.0))
    throw std::invalid_argument("config: aug.area needs 0 < lo <= hi <= 1");
  if (!(aspect_lo > 0.0 && aspect_lo <= aspect_hi))
    throw std::invalid_argument("config: aug.aspect needs 0 < lo <= hi");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw std::invalid_argument("config: aug.flip_prob must be in [0, 1]");
  if (cutmix_prob < 0.0 || cutmix_prob > 1.0)
    throw std::invalid_argument("config: aug.cutmix_prob must be in [0, 1]");
  if (!(cutmix_alpha > 0.0)) throw std::invalid_argument("config: aug.cutmix_alpha must be > 0");
  for (double s : stddev)
    if (!(s > 0.0)) throw std::invalid_argument("config: aug.std components must be > 0");
  if (tta_scales.empty()) throw std::invalid_argument("config: tta.scales must not be empty");
  for (int s : tta_scales)
    if (s < 8) throw std::invalid_argument("config: tta.scales entries must be >= 8");
  if (!(tta_area_lo > 0.0 && tta_area_lo <= tta_area_hi && tta_area_hi <= 1.0))
    throw std::invalid_argument("config: tta.area needs 0 < lo <= hi <= 1");
  if (threads < 1) throw std::invalid_argument("config: run.threads must be >= 1");
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["data.dir"] = cfg.data_dir;
  kv["data.classes"] = std::to_string(cfg.classes);
  kv["model.embed_dim"] = std::to_string(cfg.embed_dim);
  kv["train.batch_size"] = std::to_string(cfg.batch_size);
  kv["train.epochs"] = std::to_string(cfg.epochs);
  kv["train.loss"] = loss_mode_name(cfg.loss_mode);
  kv["train.pk_p"] = std::to_string(cfg.pk_p);
  kv["train.pk_q"] = std::to_string(cfg.pk_q);
  kv["loss.epsilon"] = fmt(cfg.epsilon);
  kv["loss.triplet_margin"] = fmt(cfg.triplet_margin);
  kv["loss.arcface_scale"] = fmt(cfg.arcface_scale);
  kv["loss.arcface_margin"] = fmt(cfg.arcface_margin);
  kv["loss.lambda_aux"] = fmt(cfg.lambda_aux);
  kv["optim.base_lr"] = fmt(cfg.base_lr);
  kv["optim.momentum"] = fmt(cfg.momentum);
  kv["optim.weight_decay"] = fmt(cfg.weight_decay);
  kv["optim.warmup_epochs"] = fmt(cfg.warmup_epochs);
  kv["aug.out_size"] = std::to_string(cfg.out_size);
  kv["aug.area"] = join(std::vector<double>{cfg.area_lo, cfg.area_hi});
  kv["aug.aspect"] = join(std::vector<double>{cfg.aspect_lo, cfg.aspect_hi});
  kv["aug.flip_prob"] = fmt(cfg.flip_prob);
  kv["aug.cutmix_prob"] = fmt(cfg.cutmix_prob);
  kv["aug.cutmix_alpha"] = fmt(cfg.cutmix_alpha);
  kv["aug.mean"] = join(cfg.mean);
  kv["aug.std"] = join(cfg.stddev);
  kv["aug.policy"] = cfg.policy_path;
  kv["tta.scales"] = join(cfg.tta_scales);
  kv["tta.area"] = join(std::vector<double>{cfg.tta_area_lo, cfg.tta_area_hi});
  kv["run.seed"] = std::to_string(cfg.seed);
  kv["run.threads"] = std::to_string(cfg.threads);
  kv["run.out"] = cfg.out_dir;

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t config_digest(const RunConfig& cfg) { return fnv1a(resolved_config_text(cfg)); }

}  // namespace trainkit
