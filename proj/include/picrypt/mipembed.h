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
#include <vector>

#include "picrypt/cipher.h"
#include "picrypt/pevit.h"
#include "picrypt/tensor.h"

// Detection-style front end over MI-encrypted patches: each mixed patch is
// embedded by a two-layer GELU network, detection tokens are prepended, and
// learnable absolute positions are added. Positions stay meaningful because
// mixing happens inside a patch and never moves it.
namespace picrypt::mipembed {

using tensor::Tensor;

struct DetConfig {
  std::size_t det_tokens = 100;
  std::size_t patch_size = 16;
  std::size_t channels = 3;
  std::size_t embed_dim = 64;

  std::size_t sub_dim() const { return (patch_size / 2) * (patch_size / 2) * channels; }
  void validate() const;
};

struct EmbedParams {
  Tensor w1, b1;  // sub_dim x D, D
  Tensor w2, b2;  // D x D, D
};

struct DetParams {
  EmbedParams embed;
  Tensor det_tokens;  // det_tokens x D
  Tensor pos;         // (det_tokens + N) x D
};

DetParams init_det_params(const DetConfig& config, std::size_t num_patches,
                          std::uint64_t seed, double weight_std = 0.02);

// gelu(x W1 + b1) W2 + b2 for each row of mixed (N x sub_dim).
Tensor mi_patch_embed(const Tensor& mixed, const EmbedParams& params);

// Alternative pipeline that never forms the mixed patch: project each of
// the four sub-patches with W1, average the projections, then finish with
// GELU and W2. Agrees with mi_patch_embed because averaging commutes with W1.
Tensor embed_subpatches_then_average(const std::vector<Tensor>& subpatches,
                                     const EmbedParams& params);

// [det tokens; H(x_1) ... H(x_N)] + pos.
Tensor build_det_sequence(const MixedGrid& grid, const DetParams& params);
Tensor build_det_sequence(const Tensor& mixed, const DetParams& params);

// Runs transformer encoder blocks over a detection sequence.
Tensor encode_det_sequence(const Tensor& sequence, const std::vector<pevit::LayerParams>& layers);

}  // namespace picrypt::mipembed
