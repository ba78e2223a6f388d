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

#include "picrypt/mipembed.h"

#include "picrypt/errors.h"
#include "picrypt/prng.h"

namespace picrypt::mipembed {

namespace {

Tensor normal(tensor::Shape shape, SplitMix64& rng, double stddev) {
  std::vector<double> v(tensor::shape_numel(shape));
  for (auto& x : v) x = stddev * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

void DetConfig::validate() const {
  if (patch_size < 2 || patch_size % 2 != 0) {
    throw ConfigError("det: patch size must be even, got " + std::to_string(patch_size));
  }
  if (det_tokens < 1) throw ConfigError("det: at least one detection token is required");
  if (channels != 1 && channels != 3) throw ConfigError("det: channels must be 1 or 3");
  if (embed_dim == 0) throw ConfigError("det: embed_dim must be positive");
}

DetParams init_det_params(const DetConfig& config, std::size_t num_patches, std::uint64_t seed,
                          double weight_std) {
  config.validate();
  SplitMix64 rng(seed);
  const std::size_t d = config.embed_dim;
  DetParams p;
  p.embed.w1 = normal({config.sub_dim(), d}, rng, weight_std);
  p.embed.b1 = Tensor::zeros({d}, true);
  p.embed.w2 = normal({d, d}, rng, weight_std);
  p.embed.b2 = Tensor::zeros({d}, true);
  p.det_tokens = normal({config.det_tokens, d}, rng, weight_std);
  p.pos = normal({config.det_tokens + num_patches, d}, rng, weight_std);
  return p;
}

Tensor mi_patch_embed(const Tensor& mixed, const EmbedParams& params) {
  if (mixed.rank() != 2 || mixed.dim(1) != params.w1.dim(0)) {
    throw ShapeError("mi embed: mixed patches " + tensor::shape_string(mixed.shape()) +
                     " do not match W1 " + tensor::shape_string(params.w1.shape()));
  }
  const Tensor hidden = tensor::gelu(tensor::add_row(tensor::matmul(mixed, params.w1), params.b1));
  return tensor::add_row(tensor::matmul(hidden, params.w2), params.b2);
}

Tensor embed_subpatches_then_average(const std::vector<Tensor>& subpatches,
                                     const EmbedParams& params) {
  if (subpatches.size() != 4) throw ShapeError("mi embed: expected 4 sub-patch matrices");
  Tensor acc;
  for (const auto& s : subpatches) {
    const Tensor projected = tensor::matmul(s, params.w1);
    acc = acc.defined() ? tensor::add(acc, projected) : projected;
  }
  const Tensor hidden = tensor::gelu(tensor::add_row(tensor::scale(acc, 0.25), params.b1));
  return tensor::add_row(tensor::matmul(hidden, params.w2), params.b2);
}

Tensor build_det_sequence(const Tensor& mixed, const DetParams& params) {
  const Tensor embedded = mi_patch_embed(mixed, params.embed);
  const Tensor parts[] = {params.det_tokens, embedded};
  const Tensor sequence = tensor::concat_rows(parts);
  if (params.pos.shape() != sequence.shape()) {
    throw ShapeError("det sequence: positions " + tensor::shape_string(params.pos.shape()) +
                     " do not match sequence " + tensor::shape_string(sequence.shape()));
  }
  return tensor::add(sequence, params.pos);
}

Tensor build_det_sequence(const MixedGrid& grid, const DetParams& params) {
  return build_det_sequence(pevit::mixed_matrix(grid), params);
}

Tensor encode_det_sequence(const Tensor& sequence, const std::vector<pevit::LayerParams>& layers) {
  Tensor z = sequence;
  for (const auto& layer : layers) z = pevit::encoder_block(z, layer);
  return z;
}

}  // namespace picrypt::mipembed
