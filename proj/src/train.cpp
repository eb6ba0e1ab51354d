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

#include "trainkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trainkit/checkpoint.hpp"
#include "trainkit/dataset.hpp"
#include "trainkit/imageops.hpp"
#include "trainkit/model.hpp"
#include "trainkit/optim.hpp"
#include "trainkit/parallel.hpp"

namespace fs = std::filesystem;

namespace trainkit {
namespace {

AugmentConfig make_augment_config(const RunConfig& cfg, const PolicyTable* policy) {
  AugmentConfig a;
  a.out_size = cfg.out_size;
  a.area_lo = cfg.area_lo;
  a.area_hi = cfg.area_hi;
  a.aspect_lo = cfg.aspect_lo;
  a.aspect_hi = cfg.aspect_hi;
  a.flip_prob = cfg.flip_prob;
  a.cutmix_prob = cfg.cutmix_prob;
  a.cutmix_alpha = cfg.cutmix_alpha;
  for (int c = 0; c < 3; ++c) {
    a.norm.mean[static_cast<std::size_t>(c)] = static_cast<float>(cfg.mean[static_cast<std::size_t>(c)]);
    a.norm.std[static_cast<std::size_t>(c)] = static_cast<float>(cfg.stddev[static_cast<std::size_t>(c)]);
  }
  a.policy = policy;
  a.validate();
  return a;
}

Normalization make_normalization(const RunConfig& cfg) {
  Normalization n;
  for (int c = 0; c < 3; ++c) {
    n.mean[static_cast<std::size_t>(c)] = static_cast<float>(cfg.mean[static_cast<std::size_t>(c)]);
    n.std[static_cast<std::size_t>(c)] = static_cast<float>(cfg.stddev[static_cast<std::size_t>(c)]);
  }
  return n;
}

TtaConfig make_tta_config(const RunConfig& cfg) {
  TtaConfig t;
  t.scales = cfg.tta_scales;
  t.area_lo = cfg.tta_area_lo;
  t.area_hi = cfg.tta_area_hi;
  t.aspect_lo = cfg.aspect_lo;
  t.aspect_hi = cfg.aspect_hi;
  t.validate();
  return t;
}

std::uint64_t aug_stream_id(int epoch, int sample_index) {
  return hash_combine(fnv1a("aug"), hash_combine(static_cast<std::uint64_t>(epoch),
                                                 static_cast<std::uint64_t>(sample_index)));
}

// Plain shuffled index batches, remainder dropped.
std::vector<std::vector<int>> shuffled_batches(int n, int batch, std::uint64_t seed, int epoch) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  RngStream rng(seed, hash_combine(fnv1a("shuffle"), static_cast<std::uint64_t>(epoch)));
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[rng.next_below(static_cast<std::uint32_t>(i + 1))]);
  std::vector<std::vector<int>> batches;
  for (int b = 0; b + batch <= n; b += batch)
    batches.emplace_back(idx.begin() + b, idx.begin() + b + batch);
  if (batches.empty()) batches.emplace_back(idx.begin(), idx.end());
  return batches;
}

// Class-balanced P x Q batches for the triplet loss: P distinct classes per
// batch, Q samples each (drawn with replacement when a class is smaller).
std::vector<std::vector<int>> pk_batches(const std::vector<int>& labels, int classes, int p,
                                         int q, int steps, std::uint64_t seed, int epoch) {
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  std::vector<int> usable;
  for (int c = 0; c < classes; ++c)
    if (!by_class[static_cast<std::size_t>(c)].empty()) usable.push_back(c);
  if (static_cast<int>(usable.size()) < 2)
    throw std::runtime_error("train: triplet mode needs at least two non-empty classes");
  const int pp = std::min<int>(p, static_cast<int>(usable.size()));

  std::vector<std::vector<int>> batches;
  for (int b = 0; b < steps; ++b) {
    RngStream rng(seed, hash_combine(fnv1a("pk"), hash_combine(static_cast<std::uint64_t>(epoch),
                                                               static_cast<std::uint64_t>(b))));
    std::vector<int> cls = usable;
    for (int i = static_cast<int>(cls.size()) - 1; i > 0; --i)
      std::swap(cls[static_cast<std::size_t>(i)],
                cls[rng.next_below(static_cast<std::uint32_t>(i + 1))]);
    std::vector<int> batch;
    for (int ci = 0; ci < pp; ++ci) {
      const auto& pool = by_class[static_cast<std::size_t>(cls[static_cast<std::size_t>(ci)])];
      for (int k = 0; k < q; ++k)
        batch.push_back(pool[rng.next_below(static_cast<std::uint32_t>(pool.size()))]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::string format_log_row(int epoch, long long step, double lr, double loss, double top1) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g", epoch, step, lr, loss, top1);
  return buf;
}

}  // namespace

TrainSummary run_training(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.data_dir.empty()) throw std::invalid_argument("train: data.dir is required");
  const bool metric_mode = cfg.loss_mode != LossMode::kCe;
  if (metric_mode && opts.init_checkpoint.empty() && !opts.from_scratch)
    throw std::invalid_argument(
        "train: " + std::string(loss_mode_name(cfg.loss_mode)) +
        " fine-tunes from a cross-entropy checkpoint (stage one trains with ce, stage two "
        "continues from those weights); pass --init-checkpoint, or --from-scratch to override");

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream rc(fs::path(cfg.out_dir) / "resolved-config.txt");
    rc << resolved_config_text(cfg);
    if (!rc) throw std::runtime_error("train: cannot write resolved-config.txt");
  }

  PolicyTable policy;
  const PolicyTable* policy_ptr = nullptr;
  if (!cfg.policy_path.empty()) {
    policy = load_policy_table(cfg.policy_path);
    policy_ptr = &policy;
  }
  const AugmentConfig aug = make_augment_config(cfg, policy_ptr);

  const Manifest manifest =
      load_manifest((fs::path(cfg.data_dir) / "train.csv").string(), cfg.classes);
  const std::vector<ImageU8> images = load_images(manifest, cfg.data_dir);
  const std::vector<int> labels = manifest.labels();
  const int n = static_cast<int>(images.size());

  ModelConfig mc{cfg.embed_dim, cfg.classes, cfg.out_size};
  TinyBackbone<float> model(mc, cfg.seed);

  ArcFaceHead<float> head;
  head.scale = cfg.arcface_scale;
  head.margin = cfg.arcface_margin;
  const bool use_arcface = cfg.loss_mode == LossMode::kCeArcface;
  if (use_arcface) {
    RngStream rng(cfg.seed, fnv1a("arcface.init"));
    head.init(cfg.classes, cfg.embed_dim, rng);
  }

  if (!opts.init_checkpoint.empty()) {
    const CheckpointData ckpt = read_checkpoint(opts.init_checkpoint);
    load_params(ckpt, model.param_refs());
    if (use_arcface && ckpt.has("arcface.weight"))
      load_params(ckpt, std::vector<ParamRef<float>>{{"arcface.weight", &head.weight}});
  }

  std::vector<ParamRef<float>> params = model.param_refs();
  if (use_arcface) params.push_back({"arcface.weight", &head.weight});
  SgdOptimizer<float> optimizer(params, SgdConfig{cfg.momentum, cfg.weight_decay});

  const bool pk_mode = cfg.loss_mode == LossMode::kCeTriplet;
  const int batch_size = pk_mode ? cfg.pk_p * cfg.pk_q : cfg.batch_size;
  const int steps_per_epoch = std::max(1, n / batch_size);
  const std::int64_t total_steps = static_cast<std::int64_t>(steps_per_epoch) * cfg.epochs;

  LrSchedule sched;
  sched.base_lr = cfg.base_lr;
  sched.batch_size = batch_size;
  sched.total_steps = std::max<std::int64_t>(total_steps, 1);
  sched.warmup_steps =
      std::min<std::int64_t>(static_cast<std::int64_t>(std::llround(cfg.warmup_epochs * steps_per_epoch)),
                             sched.total_steps - 1);

  CombinedLossConfig loss_cfg;
  loss_cfg.mode = cfg.loss_mode;
  loss_cfg.epsilon = cfg.epsilon;
  loss_cfg.lambda_aux = cfg.lambda_aux;
  loss_cfg.triplet.margin = cfg.triplet_margin;

  const std::string log_path = (fs::path(cfg.out_dir) / "train_log.csv").string();
  std::ofstream log(log_path);
  log << "epoch,step,lr,loss,top1\n";

  TrainSummary summary;
  summary.log_path = log_path;
  long long global_step = 0;
  double last_lr = 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = pk_mode ? pk_batches(labels, cfg.classes, cfg.pk_p, cfg.pk_q,
                                              steps_per_epoch, cfg.seed, epoch)
                                 : shuffled_batches(n, batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    long long seen = 0, correct = 0;

    for (const std::vector<int>& batch : batches) {
      const int bs = static_cast<int>(batch.size());
      // Steps 1-4 for every member (parallel, one stream per sample), then
      // the per-sample cutmix pass against already-augmented partners.
      std::vector<RngStream> streams;
      streams.reserve(static_cast<std::size_t>(bs));
      for (int i = 0; i < bs; ++i)
        streams.emplace_back(cfg.seed, aug_stream_id(epoch, batch[static_cast<std::size_t>(i)]));
      std::vector<ImageF32> staged(static_cast<std::size_t>(bs));
      parallel_for(bs, cfg.threads, [&](int i) {
        staged[static_cast<std::size_t>(i)] =
            augment_steps14(images[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])],
                            aug, streams[static_cast<std::size_t>(i)]);
      });
      std::vector<ImageF32> inputs(static_cast<std::size_t>(bs));
      std::vector<MixedTarget> targets(static_cast<std::size_t>(bs));
      for (int i = 0; i < bs; ++i) {
        RngStream& rng = streams[static_cast<std::size_t>(i)];
        const int cls = labels[static_cast<std::size_t>(batch[static_cast<std::size_t>(i)])];
        if (bs > 1 && rng.bernoulli(aug.cutmix_prob)) {
          int j = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(bs - 1)));
          if (j >= i) ++j;
          CutmixResult r = cutmix_pair(
              staged[static_cast<std::size_t>(i)], cls, staged[static_cast<std::size_t>(j)],
              labels[static_cast<std::size_t>(batch[static_cast<std::size_t>(j)])],
              aug.cutmix_alpha, rng);
          inputs[static_cast<std::size_t>(i)] = std::move(r.image);
          targets[static_cast<std::size_t>(i)] = std::move(r.target);
        } else {
          inputs[static_cast<std::size_t>(i)] = staged[static_cast<std::size_t>(i)];
          targets[static_cast<std::size_t>(i)] = MixedTarget::single(cls);
        }
      }

      Tensor<float> emb, logits;
      model.forward_train(inputs, emb, logits);
      const auto abort_nonfinite = [&]() {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << " step " << global_step
            << " (diverged); batch sample ids:";
        for (int i : batch) msg << ' ' << manifest.entries[static_cast<std::size_t>(i)].id;
        throw std::runtime_error(msg.str());
      };
      for (const float v : logits.data)
        if (!std::isfinite(v)) abort_nonfinite();
      const LossOutput<float> loss =
          combined_loss(logits, emb, targets, use_arcface ? &head : nullptr, loss_cfg);
      if (!std::isfinite(loss.value)) abort_nonfinite();

      std::vector<Tensor<float>> grads = model.backward(loss.dlogits, loss.dembeddings);
      if (use_arcface) grads.push_back(loss.dhead_weight);
      last_lr = lr_at(global_step, sched);
      optimizer.step(grads, last_lr);
      ++global_step;

      loss_sum += loss.value;
      for (int i = 0; i < bs; ++i) {
        int arg = 0;
        for (int j = 1; j < cfg.classes; ++j)
          if (logits.at(i, j) > logits.at(i, arg)) arg = j;
        if (arg == targets[static_cast<std::size_t>(i)].dominant_class()) ++correct;
        ++seen;
      }
    }

    summary.final_loss = loss_sum / static_cast<double>(batches.size());
    summary.final_train_top1 = static_cast<double>(correct) / static_cast<double>(seen);
    log << format_log_row(epoch, global_step, last_lr, summary.final_loss,
                          summary.final_train_top1)
        << '\n';
  }
  log.flush();
  if (!log) throw std::runtime_error("train: cannot write " + log_path);

  CheckpointData ckpt;
  ckpt.config_digest = config_digest(cfg);
  ckpt.epoch = static_cast<std::uint32_t>(cfg.epochs);
  for (const ParamRef<float>& p : optimizer.params())
    ckpt.tensors.push_back(pack_tensor(p.name, p.tensor->shape, p.tensor->data));
  const auto& vel = optimizer.velocity();
  for (std::size_t i = 0; i < vel.size(); ++i)
    ckpt.tensors.push_back(pack_tensor("opt/velocity/" + optimizer.params()[i].name,
                                       optimizer.params()[i].tensor->shape, vel[i]));
  summary.checkpoint_path = (fs::path(cfg.out_dir) / "model.ckpt").string();
  write_checkpoint(summary.checkpoint_path, ckpt);
  summary.epochs_run = cfg.epochs;
  return summary;
}

EvalResult run_eval(const RunConfig& cfg, const std::string& checkpoint_path, bool tta,
                    const std::string& split) {
  cfg.validate();
  if (cfg.data_dir.empty()) throw std::invalid_argument("eval: data.dir is required");
  const Manifest manifest =
      load_manifest((fs::path(cfg.data_dir) / (split + ".csv")).string(), cfg.classes);
  const std::vector<ImageU8> images = load_images(manifest, cfg.data_dir);

  ModelConfig mc{cfg.embed_dim, cfg.classes, cfg.out_size};
  TinyBackbone<float> model(mc, cfg.seed);
  load_params(read_checkpoint(checkpoint_path), model.param_refs());

  const Normalization norm = make_normalization(cfg);
  const TtaConfig tta_cfg = make_tta_config(cfg);

  EvalResult res;
  res.probs.classes = cfg.classes;
  res.probs.ids = manifest.ids();
  res.probs.values.assign(images.size() * static_cast<std::size_t>(cfg.classes), 0.0);

  const int n = static_cast<int>(images.size());
  parallel_for(n, cfg.threads, [&](int i) {
    std::vector<double> p;
    if (tta) {
      p = predict_tta(model, images[static_cast<std::size_t>(i)], norm, tta_cfg, cfg.seed,
                      fnv1a(manifest.entries[static_cast<std::size_t>(i)].id));
    } else {
      const std::vector<ImageF32> one{
          normalize(center_view(images[static_cast<std::size_t>(i)], cfg.out_size), norm)};
      const Tensor<double> probs = model.predict_probs(one);
      p.assign(probs.data.begin(), probs.data.end());
    }
    for (int j = 0; j < cfg.classes; ++j) res.probs.at(i, j) = p[static_cast<std::size_t>(j)];
  });
  res.probs.validate();
  res.top1 = top1_accuracy(res.probs, manifest.labels());
  return res;
}

}  // namespace trainkit
