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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picrypt/cipher.h"
#include "picrypt/imgio.h"
#include "picrypt/tensor.h"

// Permutation-invariant vision transformer: a ViT without absolute position
// embeddings, optionally with a reference-based positional encoding (RPE)
// computed from each patch alone.
//
// Row-vector convention throughout: a token is a 1 x D row, a linear map is
// `x * W` with W stored in x D_in x D_out.
namespace picrypt::pevit {

using tensor::NamedTensor;
using tensor::Tensor;

struct ModelConfig {
  std::size_t patch_dim = 0;
  std::size_t embed_dim = 64;
  std::size_t depth = 4;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t classes = 10;
  bool rpe_enabled = false;
  // Hidden width of the RPE network; 0 means embed_dim.
  std::size_t rpe_hidden = 0;

  std::size_t ffn_dim() const { return 4 * embed_dim; }
  std::size_t rpe_width() const { return rpe_hidden == 0 ? embed_dim : rpe_hidden; }
  // Throws ConfigError.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  std::vector<Tensor> wq, wk, wv;  // per head, D x d
  Tensor wo;                       // (h d) x D
  Tensor ln1_gamma, ln1_beta;
  Tensor ln2_gamma, ln2_beta;
  Tensor ffn_w1, ffn_b1;  // D x 4D, 4D
  Tensor ffn_w2, ffn_b2;  // 4D x D, D
};

struct RpeParams {
  Tensor x_ref;   // patch_dim
  Tensor w1, b1;  // patch_dim x hidden, hidden
  Tensor w2, b2;  // hidden x D, D
};

struct ModelParams {
  Tensor patch_embed;  // patch_dim x D
  Tensor class_token;  // 1 x D
  std::vector<LayerParams> layers;
  Tensor norm_gamma, norm_beta;
  Tensor head_weight;  // D x classes
  Tensor head_bias;    // classes
  std::optional<RpeParams> rpe;

  // Every parameter under its checkpoint name, e.g. "layer2.attn.wq.1".
  std::vector<NamedTensor> named() const;
};

struct InitOptions {
  std::uint64_t seed = 0;
  double weight_std = 0.02;
};

ModelParams init_params(const ModelConfig& config, const InitOptions& options = {});
// All weights, biases and the class token zero; LN gains one.
ModelParams zero_params(const ModelConfig& config);

ModelConfig infer_config(std::span<const NamedTensor> entries);
// Copies named entries into freshly allocated trainable parameters.
ModelParams params_from_named(std::span<const NamedTensor> entries, const ModelConfig& config);
ModelParams load_model(const std::filesystem::path& path, ModelConfig* config_out = nullptr);
void save_model(const ModelParams& params, const std::filesystem::path& path);

// softmax(Q K^T / sqrt(d)) V; the weight matrix is stored in *weights when
// requested.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, Tensor* weights = nullptr);

Tensor msa(const Tensor& x, const LayerParams& layer, std::vector<Tensor>* weights = nullptr);
Tensor feed_forward(const Tensor& x, const LayerParams& layer);
// Pre-norm block: z' = MSA(LN(z)) + z; out = FFN(LN(z')) + z'.
Tensor encoder_block(const Tensor& z, const LayerParams& layer,
                     std::vector<Tensor>* weights = nullptr);

// sigmoid(gelu((x - x_ref) W1 + b1) W2 + b2) for every row of x (N x patch_dim).
Tensor rpe(const Tensor& patches, const RpeParams& params);

// [class token; patches E (+ RPE(patches))].
Tensor embed_tokens(const Tensor& patches, const ModelParams& params, const ModelConfig& config);

struct ForwardTrace {
  // z_0 ... z_L.
  std::vector<Tensor> states;
  // attention[l][h] is the (N+1) x (N+1) weight matrix of head h, layer l.
  std::vector<std::vector<Tensor>> attention;
};

Tensor encode(const Tensor& z0, const ModelParams& params, ForwardTrace* trace = nullptr);
// head(LN(z_L[0])) as a 1 x classes row.
Tensor classify(const Tensor& z_last, const ModelParams& params);

// patches: N x patch_dim, values in [0, 1]. Returns 1 x classes logits.
Tensor forward(const Tensor& patches, const ModelParams& params, const ModelConfig& config,
               ForwardTrace* trace = nullptr);

std::vector<Tensor> export_attention(const Tensor& patches, const ModelParams& params,
                                     const ModelConfig& config, std::size_t layer);

std::size_t argmax(const Tensor& logits);

// Non-hole patches as rows scaled to [0, 1]; holes are omitted.
Tensor patch_matrix(const PatchGrid& grid);
Tensor mixed_matrix(const MixedGrid& grid);

}  // namespace picrypt::pevit
