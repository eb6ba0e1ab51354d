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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trainkit/checkpoint.hpp"
#include "trainkit/config.hpp"
#include "trainkit/dataset.hpp"
#include "trainkit/gradcheck.hpp"
#include "trainkit/imageops.hpp"
#include "trainkit/inference.hpp"
#include "trainkit/train.hpp"

namespace fs = std::filesystem;
using namespace trainkit;

namespace {

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOverrides& ov) {
  cmd->add_option("--seed", ov.seed, "Override run.seed");
  cmd->add_option("--threads", ov.threads, "Override run.threads");
  cmd->add_option("--out", ov.out, "Override run.out");
  cmd->add_option("--set", ov.sets, "Extra key=value config overrides")->take_all();
}

RunConfig load_config_with_overrides(const std::string& path, const CommonOverrides& ov) {
  RunConfig cfg = load_run_config(path);
  for (const std::string& kv : ov.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.out) cfg.out_dir = *ov.out;
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config_path, const CommonOverrides& ov,
              const std::string& init_ckpt, bool from_scratch) {
  const RunConfig cfg = load_config_with_overrides(config_path, ov);
  TrainOptions opts;
  opts.init_checkpoint = init_ckpt;
  opts.from_scratch = from_scratch;
  if (from_scratch && cfg.loss_mode != LossMode::kCe)
    std::cerr << "warning: training " << loss_mode_name(cfg.loss_mode)
              << " from scratch; this setup converges poorly compared to fine-tuning from a "
                 "ce checkpoint\n";
  const TrainSummary s = run_training(cfg, opts);
  std::printf("trained %d epochs (loss %s)\n", s.epochs_run, loss_mode_name(cfg.loss_mode));
  std::printf("final train loss %.6f top1 %.4f\n", s.final_loss, s.final_train_top1);
  std::printf("checkpoint %s\n", s.checkpoint_path.c_str());
  std::printf("log %s\n", s.log_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const CommonOverrides& ov,
             const std::string& checkpoint, const std::string& tta, const std::string& split) {
  if (tta != "on" && tta != "off")
    throw std::invalid_argument("--tta expects 'on' or 'off', got '" + tta + "'");
  const RunConfig cfg = load_config_with_overrides(config_path, ov);
  const EvalResult res = run_eval(cfg, checkpoint, tta == "on", split);
  fs::create_directories(cfg.out_dir);
  const std::string out_path = (fs::path(cfg.out_dir) / "probmatrix.txt").string();
  write_probmatrix(out_path, res.probs);
  std::printf("split %s tta %s samples %d\n", split.c_str(), tta.c_str(), res.probs.rows());
  std::printf("probmatrix %s\n", out_path.c_str());
  std::printf("top1 %.6f\n", res.top1);
  return 0;
}

int cmd_ensemble(const std::vector<std::string>& files, const std::string& labels_csv,
                 int classes, const std::string& fused_out) {
  const Manifest manifest = load_manifest(labels_csv, classes);
  std::map<std::string, int> label_of;
  for (const ManifestEntry& e : manifest.entries) label_of[e.id] = e.cls;

  auto labels_for = [&label_of](const ProbMatrix& pm) {
    std::vector<int> labels;
    labels.reserve(pm.ids.size());
    for (const std::string& id : pm.ids) {
      const auto it = label_of.find(id);
      if (it == label_of.end())
        throw std::runtime_error("ensemble: sample id '" + id + "' missing from the manifest");
      labels.push_back(it->second);
    }
    return labels;
  };

  std::vector<ProbMatrix> members;
  for (const std::string& f : files) {
    members.push_back(read_probmatrix(f));
    std::printf("member %s top1 %.6f\n", f.c_str(),
                top1_accuracy(members.back(), labels_for(members.back())));
  }
  const ProbMatrix fused = fuse(members);
  std::printf("ensemble of %zu top1 %.6f\n", members.size(),
              top1_accuracy(fused, labels_for(fused)));
  if (!fused_out.empty()) {
    write_probmatrix(fused_out, fused);
    std::printf("fused probmatrix %s\n", fused_out.c_str());
  }
  return 0;
}

int cmd_augment_preview(const std::string& config_path, const CommonOverrides& ov, int n) {
  RunConfig cfg = load_config_with_overrides(config_path, ov);
  fs::create_directories(cfg.out_dir);

  PolicyTable policy;
  AugmentConfig aug;
  aug.out_size = cfg.out_size;
  aug.area_lo = cfg.area_lo;
  aug.area_hi = cfg.area_hi;
  aug.aspect_lo = cfg.aspect_lo;
  aug.aspect_hi = cfg.aspect_hi;
  aug.flip_prob = cfg.flip_prob;
  aug.cutmix_prob = cfg.cutmix_prob;
  aug.cutmix_alpha = cfg.cutmix_alpha;
  for (int c = 0; c < 3; ++c) {
    aug.norm.mean[static_cast<std::size_t>(c)] = static_cast<float>(cfg.mean[static_cast<std::size_t>(c)]);
    aug.norm.std[static_cast<std::size_t>(c)] = static_cast<float>(cfg.stddev[static_cast<std::size_t>(c)]);
  }
  if (!cfg.policy_path.empty()) {
    policy = load_policy_table(cfg.policy_path);
    aug.policy = &policy;
  }
  aug.validate();

  const Manifest manifest =
      load_manifest((fs::path(cfg.data_dir) / "train.csv").string(), cfg.classes);
  n = std::min<int>(n, static_cast<int>(manifest.entries.size()));
  if (n < 1) throw std::invalid_argument("augment-preview: nothing to preview");
  std::vector<ImageU8> images;
  for (int i = 0; i < n; ++i)
    images.push_back(
        load_ppm((fs::path(cfg.data_dir) / manifest.entries[static_cast<std::size_t>(i)].path).string()));

  std::ofstream sidecar(fs::path(cfg.out_dir) / "targets.txt");
  for (int i = 0; i < n; ++i) {
    const ManifestEntry& entry = manifest.entries[static_cast<std::size_t>(i)];
    RngStream rng(cfg.seed, hash_combine(fnv1a("preview"), static_cast<std::uint64_t>(i)));
    const auto stage_path = [&](const char* stage) {
      return (fs::path(cfg.out_dir) / (entry.id + "_" + stage + ".ppm")).string();
    };

    ImageU8 s = random_resized_crop(images[static_cast<std::size_t>(i)], aug, rng);
    save_ppm(s, stage_path("1crop"));
    if (rng.bernoulli(aug.flip_prob)) s = hflip(s);
    save_ppm(s, stage_path("2flip"));
    if (aug.policy) s = autoaugment(s, *aug.policy, rng);
    save_ppm(s, stage_path("3policy"));
    ImageF32 f = normalize(s, aug.norm);

    MixedTarget target = MixedTarget::single(entry.cls);
    if (n > 1 && rng.bernoulli(aug.cutmix_prob)) {
      int j = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - 1)));
      if (j >= i) ++j;
      RngStream partner_rng(cfg.seed, hash_combine(fnv1a("preview"), static_cast<std::uint64_t>(j)));
      const ImageF32 donor =
          augment_steps14(images[static_cast<std::size_t>(j)], aug, partner_rng);
      CutmixResult r = cutmix_pair(f, entry.cls, donor,
                                   manifest.entries[static_cast<std::size_t>(j)].cls,
                                   aug.cutmix_alpha, rng);
      f = std::move(r.image);
      target = std::move(r.target);
    }
    save_ppm(to_u8(denormalize(f, aug.norm)), stage_path("4cutmix"));

    sidecar << entry.id;
    for (const MixedTarget::Entry& e : target.entries) sidecar << ' ' << e.cls << ':' << e.weight;
    sidecar << '\n';
  }
  std::printf("wrote %d previews to %s\n", n, cfg.out_dir.c_str());
  return 0;
}

int cmd_grad_check(std::uint64_t seed, bool inject_error) {
  const std::vector<AuditResult> results = run_gradient_audits(seed, inject_error);
  bool all_pass = true;
  for (const AuditResult& r : results) {
    std::printf("%-20s worst rel err %.3e (tol %.0e) %s\n", r.name.c_str(), r.worst_rel_err,
                r.tolerance, r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::printf("gradient audits: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}

int cmd_make_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  make_synthetic_dataset(spec, out_dir);
  std::printf("dataset written to %s (%d classes, %d train + %d val per class, %dx%d)\n",
              out_dir.c_str(), spec.classes, spec.train_per_class, spec.val_per_class, spec.size,
              spec.size);
  const double baseline = nearest_centroid_baseline(out_dir, spec.classes);
  std::printf("pixel-mean nearest-centroid baseline top1 %.4f\n", baseline);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trainkit: a from-scratch image-classification training toolkit"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  std::string train_config, init_ckpt;
  bool from_scratch = false;
  CommonOverrides train_ov;
  train->add_option("--config", train_config, "Run config file")->required();
  train->add_option("--init-checkpoint", init_ckpt, "Warm-start weights (stage-2 fine-tuning)");
  train->add_flag("--from-scratch", from_scratch,
                  "Allow metric-loss modes without an init checkpoint");
  add_common(train, train_ov);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write a probmatrix file");
  std::string eval_config, eval_ckpt, eval_tta = "off", eval_split = "val";
  CommonOverrides eval_ov;
  eval->add_option("--config", eval_config, "Run config file")->required();
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint to evaluate")->required();
  eval->add_option("--tta", eval_tta, "Multi-scale test-time augmentation: on|off");
  eval->add_option("--split", eval_split, "Manifest split to evaluate (train|val)");
  add_common(eval, eval_ov);

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "Average probmatrix files and report top-1");
  std::vector<std::string> ens_files;
  std::string ens_labels, ens_out;
  int ens_classes = 10;
  ens->add_option("files", ens_files, "Probmatrix files")->required()->expected(-1);
  ens->add_option("--labels", ens_labels, "Manifest csv with the true labels")->required();
  ens->add_option("--classes", ens_classes, "Class count of the manifest");
  ens->add_option("--fused-out", ens_out, "Optional path for the fused probmatrix");

  // augment-preview
  auto* prev = app.add_subcommand("augment-preview", "Dump per-stage augmentation images");
  std::string prev_config;
  int prev_n = 8;
  CommonOverrides prev_ov;
  prev->add_option("--config", prev_config, "Run config file")->required();
  prev->add_option("--n", prev_n, "Number of samples to preview");
  add_common(prev, prev_ov);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "Run the finite-difference gradient audits");
  std::uint64_t gc_seed = 1;
  bool gc_inject = false;
  gc->add_option("--seed", gc_seed, "Audit seed");
  gc->add_flag("--inject-error", gc_inject, "Perturb one gradient (negative control)")
      ->group("");  // hidden

  // make-synthetic
  auto* mk = app.add_subcommand("make-synthetic", "Generate the seeded synthetic dataset");
  SyntheticSpec spec;
  std::string mk_out = "dataset";
  mk->add_option("--classes", spec.classes, "Number of classes");
  mk->add_option("--train-per-class", spec.train_per_class, "Training images per class");
  mk->add_option("--val-per-class", spec.val_per_class, "Validation images per class");
  mk->add_option("--size", spec.size, "Image side length");
  mk->add_option("--seed", spec.seed, "Dataset seed");
  mk->add_option("--out", mk_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_config, train_ov, init_ckpt, from_scratch);
    if (eval->parsed()) return cmd_eval(eval_config, eval_ov, eval_ckpt, eval_tta, eval_split);
    if (ens->parsed()) return cmd_ensemble(ens_files, ens_labels, ens_classes, ens_out);
    if (prev->parsed()) return cmd_augment_preview(prev_config, prev_ov, prev_n);
    if (gc->parsed()) return cmd_grad_check(gc_seed, gc_inject);
    if (mk->parsed()) return cmd_make_synthetic(spec, mk_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
