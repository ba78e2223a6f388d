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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picrypt/attacks.h"
#include "picrypt/cipher.h"
#include "picrypt/imgio.h"
#include "picrypt/pevit.h"
#include "picrypt/tensor.h"

namespace picrypt::harness {

using tensor::Tensor;

// ---------------------------------------------------------------------------
// Encryption settings shared by training, evaluation and leakage runs.

enum class EncryptionMode { kNone, kRs, kMi, kRsThenMi, kMiThenRs, kSpn };

struct Encryption {
  EncryptionMode mode = EncryptionMode::kNone;
  std::size_t rounds = 1;  // kSpn only

  bool mixes() const { return mode != EncryptionMode::kNone && mode != EncryptionMode::kRs; }
  std::string name() const;
  static Encryption parse(const std::string& text);
};

// Length of one model input row for patch size P: P*P*C, or (P/2)^2*C once
// sub-patches are mixed.
std::size_t input_dim(const Encryption& enc, std::size_t patch_size, std::size_t channels);

struct Sampling {
  std::size_t patch_size = 16;
  std::size_t interval = 0;
  double drop_ratio = 0.0;
};

// Model input rows of an encrypted image. Dropped patches are omitted.
Tensor encrypt_for_model(const Image& img, const Encryption& enc, const Sampling& sampling,
                         std::uint64_t seed);

// Viewable ciphertext with the same size as the plaintext (interval 0, no drops).
Image encrypt_for_view(const Image& img, const Encryption& enc, std::size_t patch_size,
                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic data.

struct SynthSpec {
  std::size_t image_size = 64;
  std::size_t classes = 10;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 100;
  bool marker_enabled = false;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxSynthClasses = 10;
inline constexpr std::size_t kMarkerSize = 8;

struct LabeledImage {
  Image image;
  std::size_t label = 0;
};

struct Dataset {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
};

// One class per shape (square, disk, triangle, plus, ring, frame, bars,
// diamond, X), each drawn in its own palette colour with jitter, at a random
// position and scale over a noisy background. Labels cycle 0..classes-1.
Dataset gen_dataset(const SynthSpec& spec);

// Smooth colour fields with a few blobs and mild noise; used as jigsaw inputs.
Image gen_puzzle_image(std::size_t height, std::size_t width, std::uint64_t seed);

Image crop(const Image& img, std::size_t height, std::size_t width);

// Accuracy of a 1-nearest-neighbour classifier on raw pixels.
double nearest_neighbor_accuracy(std::span<const LabeledImage> train,
                                 std::span<const LabeledImage> test);

// ---------------------------------------------------------------------------
// Models and training.

struct TrainConfig {
  pevit::ModelConfig model;  // patch_dim is derived from patch size and encryption
  std::size_t patch_size = 16;
  std::size_t channels = 3;
  // DeiT-like contrast model: learned absolute position embedding added to
  // the tokens. Not permutation invariant.
  bool absolute_positions = false;
  double init_std = 0.02;
  std::size_t epochs = 20;
  std::size_t batch = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Encryption enc{EncryptionMode::kRs, 1};
  std::uint64_t seed = 0;
  // Stop after the first epoch whose test accuracy reaches this value (0 = off).
  double target_accuracy = 0.0;

  // Model config with patch_dim filled in; throws ConfigError.
  pevit::ModelConfig resolved_model() const;
  void validate() const;
};

struct Classifier {
  pevit::ModelConfig config;
  pevit::ModelParams params;
  // (N + 1) x D, only for the absolute-position baseline.
  std::optional<Tensor> positions;

  Tensor logits(const Tensor& patches) const;
  std::vector<tensor::NamedTensor> named() const;
};

Classifier init_classifier(const TrainConfig& cfg, std::size_t num_patches);
void save_classifier(const Classifier& model, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

// Adaptive-moment gradient descent over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<tensor::NamedTensor> params, double lr, double beta1, double beta2, double eps);
  // Applies one update using grad * grad_scale, then clears the gradients.
  void step(double grad_scale = 1.0);

 private:
  std::vector<tensor::NamedTensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  // Negative when no test set was supplied.
  double test_accuracy = -1.0;
};

struct TrainResult {
  Classifier model;
  std::vector<EpochStats> history;
};

using ProgressFn = std::function<void(const EpochStats&)>;

// Deterministic single-threaded training. With RS-style encryption every
// image gets a fresh key in every epoch.
TrainResult train(const TrainConfig& cfg, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> test_set = {}, const ProgressFn& progress = {});

struct EvalOptions {
  Sampling sampling;
  std::uint64_t shuffle_seed = 0;
};

std::vector<std::size_t> predict(const Classifier& model, std::span<const LabeledImage> data,
                                 const Encryption& enc, const EvalOptions& options);
double evaluate(const Classifier& model, std::span<const LabeledImage> data,
                const Encryption& enc, const EvalOptions& options);

void write_history_csv(std::span<const EpochStats> history, std::ostream& out);

// ---------------------------------------------------------------------------
// Privacy leakage.

using Detector = std::function<std::size_t(const Image&)>;

// Counts exact occurrences of an all-white square of side `size`.
std::size_t count_white_squares(const Image& img, std::size_t size = kMarkerSize);

// detections(encrypted corpus) / detections(original corpus).
double leakage_ratio(const Detector& detector, std::span<const Image> corpus,
                     const Encryption& enc, std::size_t patch_size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Security / granularity sweeps.

// Solves an RS puzzle built from `source`. When grid_side > 0 the source is
// first cropped so the sampled grid is grid_side x grid_side.
attacks::PuzzleMetrics run_puzzle_trial(const Image& source, const Sampling& sampling,
                                        std::size_t grid_side, std::uint64_t seed);

struct SweepSpec {
  std::vector<std::size_t> patch_sizes{16};
  std::vector<std::size_t> intervals{0};
  std::vector<double> drop_ratios{0.0};
  std::vector<std::size_t> image_sizes{64};
  std::size_t corpus = 20;
  std::uint64_t seed = 0;
  // When set, a model is trained per (patch size, image size) and evaluated
  // on every cell.
  std::optional<TrainConfig> model;
  SynthSpec data;
};

struct SweepRow {
  std::size_t patch_size = 0;
  std::size_t interval = 0;
  double drop_ratio = 0.0;
  std::size_t image_size = 0;
  double direct = 0.0;
  double neighbor = 0.0;
  std::optional<double> model_accuracy;
};

inline constexpr const char* kSweepCsvHeader =
    "patch_size,interval,drop_ratio,image_size,direct,neighbor,model_accuracy";

std::vector<SweepRow> sweep(const SweepSpec& spec);
void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

// ---------------------------------------------------------------------------
// "key=value" configuration files.

struct RunConfig {
  SynthSpec data;
  TrainConfig train;
  SweepSpec sweep;
};

// Keys: data.*, model.*, train.*, enc.*, sweep.* (see README). Unknown keys
// and malformed values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace picrypt::harness
