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

#include <cmath>
#include <iomanip>
#include <ostream>

#include "picrypt/checkpoint.h"
#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/prng.h"

namespace picrypt::harness {

namespace {

constexpr const char* kPositionsName = "pos_embed";

std::size_t patches_per_image(const Image& img, std::size_t patch_size) {
  return grid_extent(img.height, patch_size, 0) * grid_extent(img.width, patch_size, 0);
}

}  // namespace

pevit::ModelConfig TrainConfig::resolved_model() const {
  pevit::ModelConfig m = model;
  m.patch_dim = input_dim(enc, patch_size, channels);
  m.validate();
  return m;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (batch < 1) throw ConfigError("train: batch must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (patch_size < 2) throw ConfigError("train: patch size must be at least 2");
  if (enc.mixes() && patch_size % 2 != 0) {
    throw ConfigError("train: mixing encryption needs an even patch size");
  }
  resolved_model();
}

Tensor Classifier::logits(const Tensor& patches) const {
  Tensor z0 = pevit::embed_tokens(patches, params, config);
  if (positions) z0 = tensor::add(z0, *positions);
  return pevit::classify(pevit::encode(z0, params), params);
}

std::vector<tensor::NamedTensor> Classifier::named() const {
  auto out = params.named();
  if (positions) out.push_back({kPositionsName, *positions});
  return out;
}

Classifier init_classifier(const TrainConfig& cfg, std::size_t num_patches) {
  Classifier model;
  model.config = cfg.resolved_model();
  model.params = pevit::init_params(model.config, {cfg.seed, cfg.init_std});
  if (cfg.absolute_positions) {
    SplitMix64 rng(derive_seed(cfg.seed, 0x9051));
    std::vector<double> v((num_patches + 1) * model.config.embed_dim);
    for (auto& x : v) x = cfg.init_std * rng.normal();
    model.positions = Tensor::from({num_patches + 1, model.config.embed_dim}, std::move(v), true);
  }
  return model;
}

void save_classifier(const Classifier& model, const std::filesystem::path& path) {
  tensor::save_checkpoint(model.named(), path);
}

Classifier load_classifier(const std::filesystem::path& path) {
  auto entries = tensor::load_checkpoint(path);
  Classifier model;
  for (auto it = entries.begin(); it != entries.end(); ++it) {
    if (it->name == kPositionsName) {
      model.positions = Tensor::from(it->tensor.shape(),
                                     std::vector<double>(it->tensor.data().begin(),
                                                         it->tensor.data().end()),
                                     true);
      entries.erase(it);
      break;
    }
  }
  model.config = pevit::infer_config(entries);
  model.params = pevit::params_from_named(entries, model.config);
  return model;
}

Adam::Adam(std::vector<tensor::NamedTensor> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step(double grad_scale) {
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor t = params_[k].tensor;
    const auto g = t.grad();
    auto w = t.mutable_data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i] * grad_scale;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
    t.zero_grad();
  }
}

TrainResult train(const TrainConfig& cfg, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> test_set, const ProgressFn& progress) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: empty training set");
  const Image& first = train_set.front().image;
  if (first.channels != cfg.channels) {
    throw ConfigError("train: images have " + std::to_string(first.channels) +
                      " channels, config expects " + std::to_string(cfg.channels));
  }
  if (first.height % cfg.patch_size != 0 || first.width % cfg.patch_size != 0) {
    throw ConfigError("train: image size " + std::to_string(first.height) +
                      " is not divisible by patch size " + std::to_string(cfg.patch_size));
  }

  TrainResult result{init_classifier(cfg, patches_per_image(first, cfg.patch_size)), {}};
  Classifier& model = result.model;
  for (auto& p : model.named()) p.tensor.zero_grad();
  Adam adam(model.named(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  const Sampling sampling{cfg.patch_size, 0, 0.0};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = gen_key(derive_seed(cfg.seed, 0x0E00 + epoch), train_set.size()).perm;
    const std::uint64_t key_stream = derive_seed(cfg.seed, 0x5EED0000 + epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      for (std::size_t k = start; k < end; ++k) {
        const LabeledImage& sample = train_set[order[k]];
        const Tensor x = encrypt_for_model(sample.image, cfg.enc, sampling,
                                           derive_seed(key_stream, order[k]));
        const Tensor logits = model.logits(x);
        const Tensor loss = tensor::cross_entropy(logits, sample.label);
        tensor::backward(loss);
        loss_sum += loss.item();
        correct += pevit::argmax(logits) == sample.label;
      }
      adam.step(1.0 / static_cast<double>(end - start));
    }
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (!test_set.empty()) {
      stats.test_accuracy =
          evaluate(model, test_set, cfg.enc, {sampling, derive_seed(cfg.seed, 0xE7A1)});
    }
    result.history.push_back(stats);
    if (progress) progress(stats);
    if (cfg.target_accuracy > 0.0 && stats.test_accuracy >= cfg.target_accuracy) break;
  }
  return result;
}

std::vector<std::size_t> predict(const Classifier& model, std::span<const LabeledImage> data,
                                 const Encryption& enc, const EvalOptions& options) {
  tensor::NoGradGuard no_grad;
  std::vector<std::size_t> labels;
  labels.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Tensor x = encrypt_for_model(data[i].image, enc, options.sampling,
                                       derive_seed(options.shuffle_seed, i));
    labels.push_back(pevit::argmax(model.logits(x)));
  }
  return labels;
}

double evaluate(const Classifier& model, std::span<const LabeledImage> data,
                const Encryption& enc, const EvalOptions& options) {
  if (data.empty()) throw ConfigError("evaluate: empty data set");
  const auto labels = predict(model, data, enc, options);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += labels[i] == data[i].label;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void write_history_csv(std::span<const EpochStats> history, std::ostream& out) {
  out << "epoch,loss,train_accuracy,test_accuracy\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& s : history) {
    out << s.epoch << "," << s.loss << "," << s.train_accuracy << ",";
    if (s.test_accuracy >= 0.0) out << s.test_accuracy;
    out << "\n";
  }
  out << std::defaultfloat;
}

}  // namespace picrypt::harness
