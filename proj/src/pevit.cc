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

#include "picrypt/pevit.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "picrypt/checkpoint.h"
#include "picrypt/errors.h"
#include "picrypt/prng.h"

namespace picrypt::pevit {

namespace {

using tensor::Shape;

Tensor param(Shape shape, double value) { return Tensor::full(std::move(shape), value, true); }

Tensor normal_param(Shape shape, SplitMix64& rng, double stddev) {
  std::vector<double> v(tensor::shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Builds parameters with `weight(shape)` for matrices and tokens and constant
// zeros / ones for biases and LN parameters.
template <typename WeightFn>
ModelParams build(const ModelConfig& config, WeightFn weight) {
  config.validate();
  const std::size_t d_model = config.embed_dim;
  ModelParams p;
  p.patch_embed = weight(Shape{config.patch_dim, d_model});
  p.class_token = weight(Shape{1, d_model});
  for (std::size_t l = 0; l < config.depth; ++l) {
    LayerParams layer;
    for (std::size_t h = 0; h < config.heads; ++h) {
      layer.wq.push_back(weight(Shape{d_model, config.head_dim}));
      layer.wk.push_back(weight(Shape{d_model, config.head_dim}));
      layer.wv.push_back(weight(Shape{d_model, config.head_dim}));
    }
    layer.wo = weight(Shape{config.heads * config.head_dim, d_model});
    layer.ln1_gamma = param({d_model}, 1.0);
    layer.ln1_beta = param({d_model}, 0.0);
    layer.ln2_gamma = param({d_model}, 1.0);
    layer.ln2_beta = param({d_model}, 0.0);
    layer.ffn_w1 = weight(Shape{d_model, config.ffn_dim()});
    layer.ffn_b1 = param({config.ffn_dim()}, 0.0);
    layer.ffn_w2 = weight(Shape{config.ffn_dim(), d_model});
    layer.ffn_b2 = param({d_model}, 0.0);
    p.layers.push_back(std::move(layer));
  }
  p.norm_gamma = param({d_model}, 1.0);
  p.norm_beta = param({d_model}, 0.0);
  p.head_weight = weight(Shape{d_model, config.classes});
  p.head_bias = param({config.classes}, 0.0);
  if (config.rpe_enabled) {
    RpeParams r;
    r.x_ref = weight(Shape{config.patch_dim});
    r.w1 = weight(Shape{config.patch_dim, config.rpe_width()});
    r.b1 = param({config.rpe_width()}, 0.0);
    r.w2 = weight(Shape{config.rpe_width(), d_model});
    r.b2 = param({d_model}, 0.0);
    p.rpe = std::move(r);
  }
  return p;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return tensor::add_row(tensor::matmul(x, w), b);
}

}  // namespace

void ModelConfig::validate() const {
  if (patch_dim == 0) throw ConfigError("model: patch_dim must be positive");
  if (embed_dim == 0) throw ConfigError("model: embed_dim must be positive");
  if (heads == 0 || head_dim == 0 || heads * head_dim != embed_dim) {
    throw ConfigError("model: heads (" + std::to_string(heads) + ") x head_dim (" +
                      std::to_string(head_dim) + ") must equal embed_dim (" +
                      std::to_string(embed_dim) + ")");
  }
  if (depth < 1) throw ConfigError("model: depth must be at least 1");
  if (classes < 2) throw ConfigError("model: classes must be at least 2");
}

std::vector<NamedTensor> ModelParams::named() const {
  std::vector<NamedTensor> out;
  out.push_back({"patch_embed", patch_embed});
  out.push_back({"class_token", class_token});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.wq.size(); ++h) {
      out.push_back({prefix + "attn.wq." + std::to_string(h), layer.wq[h]});
      out.push_back({prefix + "attn.wk." + std::to_string(h), layer.wk[h]});
      out.push_back({prefix + "attn.wv." + std::to_string(h), layer.wv[h]});
    }
    out.push_back({prefix + "attn.wo", layer.wo});
    out.push_back({prefix + "ln1.gamma", layer.ln1_gamma});
    out.push_back({prefix + "ln1.beta", layer.ln1_beta});
    out.push_back({prefix + "ln2.gamma", layer.ln2_gamma});
    out.push_back({prefix + "ln2.beta", layer.ln2_beta});
    out.push_back({prefix + "ffn.w1", layer.ffn_w1});
    out.push_back({prefix + "ffn.b1", layer.ffn_b1});
    out.push_back({prefix + "ffn.w2", layer.ffn_w2});
    out.push_back({prefix + "ffn.b2", layer.ffn_b2});
  }
  out.push_back({"norm.gamma", norm_gamma});
  out.push_back({"norm.beta", norm_beta});
  out.push_back({"head.weight", head_weight});
  out.push_back({"head.bias", head_bias});
  if (rpe) {
    out.push_back({"rpe.x_ref", rpe->x_ref});
    out.push_back({"rpe.w1", rpe->w1});
    out.push_back({"rpe.b1", rpe->b1});
    out.push_back({"rpe.w2", rpe->w2});
    out.push_back({"rpe.b2", rpe->b2});
  }
  return out;
}

ModelParams init_params(const ModelConfig& config, const InitOptions& options) {
  SplitMix64 rng(options.seed);
  return build(config, [&](Shape s) { return normal_param(std::move(s), rng, options.weight_std); });
}

ModelParams zero_params(const ModelConfig& config) {
  return build(config, [](Shape s) { return param(std::move(s), 0.0); });
}

ModelConfig infer_config(std::span<const NamedTensor> entries) {
  std::map<std::string, Tensor> by_name;
  for (const auto& e : entries) by_name[e.name] = e.tensor;
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("checkpoint: missing " + name);
    return it->second;
  };
  ModelConfig c;
  const Tensor& embed = get("patch_embed");
  if (embed.rank() != 2) throw ConfigError("checkpoint: patch_embed must be a matrix");
  c.patch_dim = embed.dim(0);
  c.embed_dim = embed.dim(1);
  c.depth = 0;
  while (by_name.count("layer" + std::to_string(c.depth) + ".ln1.gamma")) ++c.depth;
  c.heads = 0;
  while (by_name.count("layer0.attn.wq." + std::to_string(c.heads))) ++c.heads;
  c.head_dim = c.heads ? get("layer0.attn.wq.0").shape().back() : 0;
  c.classes = get("head.weight").shape().back();
  c.rpe_enabled = by_name.count("rpe.w1") > 0;
  c.rpe_hidden = c.rpe_enabled ? get("rpe.w1").shape().back() : 0;
  c.validate();
  return c;
}

ModelParams params_from_named(std::span<const NamedTensor> entries, const ModelConfig& config) {
  ModelParams p = zero_params(config);
  std::map<std::string, Tensor> by_name;
  for (const auto& e : entries) by_name[e.name] = e.tensor;
  const auto targets = p.named();
  if (targets.size() != entries.size()) {
    throw ConfigError("checkpoint: holds " + std::to_string(entries.size()) +
                      " tensors, model expects " + std::to_string(targets.size()));
  }
  for (auto target : targets) {
    auto it = by_name.find(target.name);
    if (it == by_name.end()) throw ConfigError("checkpoint: missing " + target.name);
    if (it->second.shape() != target.tensor.shape()) {
      throw ConfigError("checkpoint: " + target.name + " has shape " +
                        tensor::shape_string(it->second.shape()) + ", expected " +
                        tensor::shape_string(target.tensor.shape()));
    }
    std::ranges::copy(it->second.data(), target.tensor.mutable_data().begin());
  }
  return p;
}

ModelParams load_model(const std::filesystem::path& path, ModelConfig* config_out) {
  const auto entries = tensor::load_checkpoint(path);
  const ModelConfig config = infer_config(entries);
  if (config_out) *config_out = config;
  return params_from_named(entries, config);
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  tensor::save_checkpoint(params.named(), path);
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, Tensor* weights) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: Q " + tensor::shape_string(q.shape()) + ", K " +
                     tensor::shape_string(k.shape()) + ", V " + tensor::shape_string(v.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  const Tensor logits = tensor::scale(tensor::matmul(q, tensor::transpose_last_two(k)), inv_sqrt_d);
  const Tensor w = tensor::softmax_rows(logits);
  if (weights) *weights = w;
  return tensor::matmul(w, v);
}

Tensor msa(const Tensor& x, const LayerParams& layer, std::vector<Tensor>* weights) {
  std::vector<Tensor> heads;
  heads.reserve(layer.wq.size());
  for (std::size_t h = 0; h < layer.wq.size(); ++h) {
    Tensor w;
    heads.push_back(attention(tensor::matmul(x, layer.wq[h]), tensor::matmul(x, layer.wk[h]),
                              tensor::matmul(x, layer.wv[h]), weights ? &w : nullptr));
    if (weights) weights->push_back(w);
  }
  return tensor::matmul(tensor::concat_last_axis(heads), layer.wo);
}

Tensor feed_forward(const Tensor& x, const LayerParams& layer) {
  return linear(tensor::gelu(linear(x, layer.ffn_w1, layer.ffn_b1)), layer.ffn_w2, layer.ffn_b2);
}

Tensor encoder_block(const Tensor& z, const LayerParams& layer, std::vector<Tensor>* weights) {
  const Tensor mid =
      tensor::add(msa(tensor::layer_norm(z, layer.ln1_gamma, layer.ln1_beta), layer, weights), z);
  return tensor::add(feed_forward(tensor::layer_norm(mid, layer.ln2_gamma, layer.ln2_beta), layer),
                     mid);
}

Tensor rpe(const Tensor& patches, const RpeParams& params) {
  const Tensor centered = tensor::add_row(patches, tensor::scale(params.x_ref, -1.0));
  const Tensor hidden = tensor::gelu(linear(centered, params.w1, params.b1));
  return tensor::sigmoid(linear(hidden, params.w2, params.b2));
}

Tensor embed_tokens(const Tensor& patches, const ModelParams& params, const ModelConfig& config) {
  if (patches.rank() != 2 || patches.dim(1) != config.patch_dim) {
    throw ShapeError("forward: patches " + tensor::shape_string(patches.shape()) +
                     " do not match patch_dim " + std::to_string(config.patch_dim));
  }
  Tensor tokens = tensor::matmul(patches, params.patch_embed);
  if (config.rpe_enabled) {
    if (!params.rpe) throw ConfigError("forward: RPE enabled but parameters are missing");
    tokens = tensor::add(tokens, rpe(patches, *params.rpe));
  }
  const Tensor parts[] = {params.class_token, tokens};
  return tensor::concat_rows(parts);
}

Tensor encode(const Tensor& z0, const ModelParams& params, ForwardTrace* trace) {
  Tensor z = z0;
  if (trace) trace->states.push_back(z);
  for (const auto& layer : params.layers) {
    std::vector<Tensor> weights;
    z = encoder_block(z, layer, trace ? &weights : nullptr);
    if (trace) {
      trace->states.push_back(z);
      trace->attention.push_back(std::move(weights));
    }
  }
  return z;
}

Tensor classify(const Tensor& z_last, const ModelParams& params) {
  const Tensor y = tensor::layer_norm(tensor::slice_rows(z_last, 0, 1), params.norm_gamma,
                                      params.norm_beta);
  return linear(y, params.head_weight, params.head_bias);
}

Tensor forward(const Tensor& patches, const ModelParams& params, const ModelConfig& config,
               ForwardTrace* trace) {
  return classify(encode(embed_tokens(patches, params, config), params, trace), params);
}

std::vector<Tensor> export_attention(const Tensor& patches, const ModelParams& params,
                                     const ModelConfig& config, std::size_t layer) {
  if (layer >= params.layers.size()) {
    throw ConfigError("attention export: layer " + std::to_string(layer) + " out of range (depth " +
                      std::to_string(params.layers.size()) + ")");
  }
  tensor::NoGradGuard no_grad;
  ForwardTrace trace;
  forward(patches, params, config, &trace);
  return trace.attention[layer];
}

std::size_t argmax(const Tensor& logits) {
  const auto d = logits.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

Tensor patch_matrix(const PatchGrid& grid) {
  const std::size_t dim = grid.patch_values();
  std::vector<double> values;
  std::size_t rows = 0;
  for (const auto& rec : grid.patches) {
    if (!rec) continue;
    for (auto b : *rec) values.push_back(static_cast<double>(b) / 255.0);
    ++rows;
  }
  return Tensor::from({rows, dim}, std::move(values));
}

Tensor mixed_matrix(const MixedGrid& grid) {
  const std::size_t dim = grid.mixed_values();
  std::vector<double> values;
  values.reserve(grid.patches.size() * dim);
  for (const auto& p : grid.patches) values.insert(values.end(), p.begin(), p.end());
  return Tensor::from({grid.patches.size(), dim}, std::move(values));
}

}  // namespace picrypt::pevit
