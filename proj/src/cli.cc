// Copyright 2026 The picrypt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "picrypt/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>

#include "picrypt/attacks.h"
#include "picrypt/cipher.h"
#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/imgio.h"
#include "picrypt/pevit.h"
#include "picrypt/prng.h"
#include "picrypt/tensor.h"

namespace picrypt::cli {

namespace {

using harness::Encryption;
using harness::EncryptionMode;
using tensor::Tensor;

struct Options {
  std::uint64_t seed = 0;
  std::string in, out, key, mode = "rs", config, model, history;
  std::size_t patch = 16;
  std::size_t rounds = 2;
  std::size_t n = 0;
  std::size_t label = 0;
  std::size_t trials = 200;
  std::size_t index = 0;
  double amplitude = 0.25;
  std::optional<std::size_t> epochs, interval;
  std::optional<double> drop;
  std::uint64_t shuffle_seed = 0;
  std::size_t samples = 1000;
  bool rpe = false;
  double tolerance = 1e-4;
};

Encryption parse_mode(const Options& o) {
  Encryption enc = Encryption::parse(o.mode);
  if (enc.mode == EncryptionMode::kSpn) enc.rounds = o.rounds;
  return enc;
}

harness::RunConfig run_config(const Options& o) {
  return o.config.empty() ? harness::parse_config("") : harness::load_config(o.config);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  f << text;
  if (!f) throw IoError("cannot write " + path);
}

int cmd_encrypt(const Options& o, std::ostream& out) {
  const Image img = load_ppm(o.in);
  const Encryption enc = parse_mode(o);
  const bool keyed = enc.mode == EncryptionMode::kRs || enc.mode == EncryptionMode::kRsThenMi ||
                     enc.mode == EncryptionMode::kMiThenRs;
  save_ppm(harness::encrypt_for_view(img, enc, o.patch, o.seed), o.out);
  if (keyed && !o.key.empty()) {
    const std::size_t n = split_patches(img, o.patch, 0).size();
    save_key(gen_key(o.seed, n), o.key);
  }
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

int cmd_decrypt(const Options& o, std::ostream& out) {
  const Image img = load_ppm(o.in);
  const PermutationKey key = load_key(o.key);
  const PatchGrid grid = split_patches(img, o.patch, 0);
  if (grid.size() != key.n) {
    throw KeyError("key is for " + std::to_string(key.n) + " patches, image has " +
                   std::to_string(grid.size()));
  }
  save_ppm(assemble(rs_decrypt(grid, key)), o.out);
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

int cmd_keyspace(const Options& o, std::ostream& out) {
  out << keyspace(o.n) << "\n";
  return kExitOk;
}

int cmd_attack_jigsaw(const Options& o, std::ostream& out) {
  const Image img = load_ppm(o.in);
  const PatchGrid grid = split_patches(img, o.patch, 0);
  const auto found =
      attacks::jigsaw_solve(grid.patches, grid.rows, grid.cols, grid.patch_size, grid.channels);
  out << found.dump();
  if (!o.key.empty()) {
    const PermutationKey key = load_key(o.key);
    if (key.n != grid.size()) throw KeyError("key does not match the image grid");
    const auto truth = attacks::truth_arrangement(grid.patches, key, grid.rows, grid.cols);
    const auto m = attacks::puzzle_metrics(found, truth);
    out << "direct=" << m.direct << "\nneighbor=" << m.neighbor << "\n";
  }
  if (!o.out.empty()) {
    save_ppm(attacks::render_arrangement(found, grid.patches, grid.patch_size, grid.channels),
             o.out);
  }
  return kExitOk;
}

pevit::ModelParams model_or_init(const Options& o, pevit::ModelConfig& config) {
  if (!o.model.empty()) return pevit::load_model(o.model, &config);
  return pevit::init_params(config, {o.seed, 0.02});
}

int cmd_attack_gradleak(const Options& o, std::ostream& out) {
  const Image img = load_ppm(o.in);
  const PatchGrid grid = split_patches(img, o.patch, 0);
  pevit::ModelConfig config;
  config.patch_dim = grid.patch_values();
  const auto params = model_or_init(o, config);
  if (config.patch_dim != grid.patch_values()) {
    throw ShapeError("model patch_dim does not match --patch");
  }
  const PermutationKey key = gen_key(o.seed, grid.size());
  const auto r = attacks::gradient_leakage_attack(grid, key, params, config, o.trials, o.seed);
  out << std::setprecision(12) << "failures " << r.failures << "\nmin_cipher_cosine "
      << r.min_cipher_cosine << "\nplain_correlation " << r.plain_correlation
      << "\nchance_mean " << r.chance_mean << "\nchance_std " << r.chance_std << "\n";
  if (!o.out.empty()) {
    // Recovered directions rescaled per slot to [0, 255] and reassembled.
    PatchGrid view = grid;
    for (std::size_t i = 0; i < view.size(); ++i) {
      const auto& v = r.recovered[i];
      if (v.empty()) {
        view.patches[i].reset();
        continue;
      }
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double span = *hi - *lo;
      PatchData p(v.size());
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double t = span > 0.0 ? (v[j] - *lo) / span : 0.0;
        p[j] = static_cast<std::uint8_t>(std::nearbyint(255.0 * t));
      }
      view.patches[i] = std::move(p);
    }
    for (auto& p : view.patches) {
      if (!p) p = PatchData(view.patch_values(), 0);
    }
    save_ppm(assemble(view), o.out);
  }
  return kExitOk;
}

int cmd_attack_collision(const Options& o, std::ostream& out) {
  const Image img = load_ppm(o.in);
  const MixedGrid mixed = mi_encrypt(split_patches(img, o.patch, 0));
  if (o.index >= mixed.patches.size()) throw GeometryError("--index is past the last patch");
  const auto& target = mixed.patches[o.index];
  const auto first = attacks::mi_collision(target, o.seed, o.amplitude);
  const auto second = attacks::mi_collision(target, derive_seed(o.seed, 1), o.amplitude);
  auto residual = [&](const std::array<std::vector<double>, 4>& set) {
    double worst = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
      const double mean = (set[0][j] + set[1][j] + set[2][j] + set[3][j]) / 4.0;
      worst = std::max(worst, std::abs(mean - target[j]));
    }
    return worst;
  };
  double distance = 0.0;
  for (std::size_t q = 0; q < 4; ++q) {
    for (std::size_t j = 0; j < target.size(); ++j) {
      distance = std::max(distance, std::abs(first[q][j] - second[q][j]));
    }
  }
  out << std::setprecision(6) << "patch " << o.index << "\nresidual_a " << residual(first)
      << "\nresidual_b " << residual(second) << "\nmax_difference " << distance << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  harness::RunConfig cfg = run_config(o);
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (!o.mode.empty()) cfg.train.enc = parse_mode(o);
  cfg.train.validate();
  const harness::Dataset data = harness::gen_dataset(cfg.data);
  const auto result = harness::train(cfg.train, data.train, data.test, [&](const auto& s) {
    out << "epoch " << s.epoch << " loss " << s.loss << " train " << s.train_accuracy
        << " test " << s.test_accuracy << "\n";
  });
  harness::save_classifier(result.model, o.out);
  if (!o.history.empty()) {
    std::ofstream f(o.history);
    if (!f) throw IoError("cannot open " + o.history);
    harness::write_history_csv(result.history, f);
  }
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const harness::RunConfig cfg = run_config(o);
  const harness::Classifier model = harness::load_classifier(o.model);
  const Encryption enc = parse_mode(o);
  if (harness::input_dim(enc, o.patch, 3) != model.config.patch_dim) {
    throw ConfigError("model input width does not match --mode/--patch");
  }
  harness::EvalOptions options;
  options.sampling.patch_size = o.patch;
  options.sampling.interval = o.interval.value_or(0);
  options.sampling.drop_ratio = o.drop.value_or(0.0);
  options.shuffle_seed = o.shuffle_seed;
  const harness::Dataset data = harness::gen_dataset(cfg.data);
  out << "accuracy " << harness::evaluate(model, data.test, enc, options) << "\n";
  return kExitOk;
}

int cmd_leakage(const Options& o, std::ostream& out) {
  harness::RunConfig cfg = run_config(o);
  cfg.data.marker_enabled = true;
  const harness::Dataset data = harness::gen_dataset(cfg.data);
  std::vector<Image> corpus;
  for (const auto& s : data.test) corpus.push_back(s.image);
  const auto detector = [](const Image& img) { return harness::count_white_squares(img); };
  out << "leakage " << harness::leakage_ratio(detector, corpus, parse_mode(o), o.patch, o.seed)
      << "\n";
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  harness::RunConfig cfg = run_config(o);
  cfg.sweep.seed = o.seed;
  const auto rows = harness::sweep(cfg.sweep);
  if (o.out.empty()) {
    harness::write_sweep_csv(rows, out);
  } else {
    std::ofstream f(o.out);
    if (!f) throw IoError("cannot open " + o.out);
    harness::write_sweep_csv(rows, f);
  }
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  pevit::ModelConfig config;
  config.patch_dim = 12;
  config.embed_dim = 8;
  config.depth = 2;
  config.heads = 2;
  config.head_dim = 4;
  config.classes = 3;
  config.rpe_enabled = o.rpe;
  const auto params = pevit::init_params(config, {o.seed, 0.5});
  SplitMix64 rng(derive_seed(o.seed, 7));
  std::vector<double> x(4 * config.patch_dim);
  for (auto& v : x) v = rng.uniform();
  const Tensor patches = Tensor::from({4, config.patch_dim}, std::move(x));
  const auto named = params.named();
  tensor::GradCheckOptions options;
  options.samples = o.samples;
  options.seed = o.seed;
  const auto report = tensor::grad_check(
      [&] { return tensor::cross_entropy(pevit::forward(patches, params, config), 1); }, named,
      options);
  out << std::setprecision(6) << "checked " << report.checked << "\nmax_relative_error "
      << report.max_relative_error << "\nworst " << report.worst_param << "["
      << report.worst_index << "]\n";
  if (report.max_relative_error >= o.tolerance) {
    err << "gradient check failed\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-shuffling image cipher, permutation-invariant ViT and attacks", "picrypt"};
  app.require_subcommand(1);
  Options o;

  auto seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "PRNG seed"); };
  auto patch = [&](CLI::App* sub) { sub->add_option("--patch", o.patch, "patch size"); };
  auto mode = [&](CLI::App* sub) {
    sub->add_option("--mode", o.mode, "none|rs|mi|rs+mi|mi+rs|spn");
    sub->add_option("--rounds", o.rounds, "spn rounds");
  };

  auto* encrypt = app.add_subcommand("encrypt", "encrypt an image");
  encrypt->add_option("--in", o.in)->required();
  encrypt->add_option("--out", o.out)->required();
  encrypt->add_option("--key", o.key, "where to write the RS key");
  mode(encrypt), patch(encrypt), seed(encrypt);

  auto* decrypt = app.add_subcommand("decrypt", "undo RS encryption");
  decrypt->add_option("--in", o.in)->required();
  decrypt->add_option("--out", o.out)->required();
  decrypt->add_option("--key", o.key)->required();
  patch(decrypt);

  auto* ks = app.add_subcommand("keyspace", "print n!");
  ks->add_option("--n", o.n)->required();

  auto* jig = app.add_subcommand("attack-jigsaw", "solve an RS-shuffled image");
  jig->add_option("--in", o.in)->required();
  jig->add_option("--out", o.out, "reconstruction");
  jig->add_option("--key", o.key, "true key, for scoring");
  patch(jig);

  auto* leak = app.add_subcommand("attack-gradleak", "single-token gradient inversion");
  leak->add_option("--in", o.in, "plaintext image")->required();
  leak->add_option("--model", o.model, "checkpoint (default: random init)");
  leak->add_option("--out", o.out, "recovered patches as an image");
  leak->add_option("--trials", o.trials, "random pairings for the chance baseline");
  patch(leak), seed(leak);

  auto* col = app.add_subcommand("attack-collision", "MI preimage collisions");
  col->add_option("--in", o.in)->required();
  col->add_option("--index", o.index, "patch index");
  col->add_option("--amplitude", o.amplitude);
  patch(col), seed(col);

  auto* tr = app.add_subcommand("train", "train a classifier on synthetic data");
  tr->add_option("--config", o.config);
  tr->add_option("--out", o.out)->required();
  tr->add_option("--history", o.history, "per-epoch CSV");
  tr->add_option("--epochs", o.epochs);
  tr->add_option("--mode", o.mode, "none|rs|mi|rs+mi|mi+rs|spn");
  tr->add_option("--rounds", o.rounds, "spn rounds");

  auto* ev = app.add_subcommand("eval", "test accuracy of a checkpoint");
  ev->add_option("--config", o.config);
  ev->add_option("--model", o.model)->required();
  ev->add_option("--shuffle-seed", o.shuffle_seed);
  ev->add_option("--interval", o.interval);
  ev->add_option("--drop", o.drop);
  mode(ev), patch(ev);

  auto* lk = app.add_subcommand("leakage", "white-marker detection ratio");
  lk->add_option("--config", o.config);
  mode(lk), patch(lk), seed(lk);

  auto* sw = app.add_subcommand("sweep", "granularity / sampling sweep");
  sw->add_option("--config", o.config);
  sw->add_option("--out", o.out, "CSV (default: stdout)");
  seed(sw);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the model");
  gc->add_option("--samples", o.samples);
  gc->add_option("--tolerance", o.tolerance);
  gc->add_flag("--rpe", o.rpe);
  seed(gc);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // "train" reads the mode from the config unless --mode was given.
  if (tr->parsed() && tr->count("--mode") == 0) o.mode.clear();

  try {
    if (encrypt->parsed()) return cmd_encrypt(o, out);
    if (decrypt->parsed()) return cmd_decrypt(o, out);
    if (ks->parsed()) return cmd_keyspace(o, out);
    if (jig->parsed()) return cmd_attack_jigsaw(o, out);
    if (leak->parsed()) return cmd_attack_gradleak(o, out);
    if (col->parsed()) return cmd_attack_collision(o, out);
    if (tr->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (lk->parsed()) return cmd_leakage(o, out);
    if (sw->parsed()) return cmd_sweep(o, out);
    if (gc->parsed()) return cmd_gradcheck(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  throw InternalError("no subcommand dispatched");
}

}  // namespace picrypt::cli
