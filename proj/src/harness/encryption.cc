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

#include <optional>

#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/prng.h"

namespace picrypt::harness {

namespace {

using MixedSlots = std::vector<std::optional<std::vector<double>>>;

MixedSlots mix_slots(const PatchGrid& grid) {
  if (grid.patch_size % 2 != 0) {
    throw GeometryError("mi: patch size " + std::to_string(grid.patch_size) + " is odd");
  }
  MixedSlots out;
  out.reserve(grid.size());
  for (const auto& rec : grid.patches) {
    if (!rec) {
      out.emplace_back();
      continue;
    }
    out.emplace_back(mix_subpatches(split_subpatches(*rec, grid.patch_size, grid.channels)));
  }
  return out;
}

Tensor rows_of(const MixedSlots& slots, std::size_t dim) {
  std::vector<double> values;
  std::size_t rows = 0;
  for (const auto& s : slots) {
    if (!s) continue;
    values.insert(values.end(), s->begin(), s->end());
    ++rows;
  }
  return Tensor::from({rows, dim}, std::move(values));
}

}  // namespace

std::string Encryption::name() const {
  switch (mode) {
    case EncryptionMode::kNone: return "none";
    case EncryptionMode::kRs: return "rs";
    case EncryptionMode::kMi: return "mi";
    case EncryptionMode::kRsThenMi: return "rs+mi";
    case EncryptionMode::kMiThenRs: return "mi+rs";
    case EncryptionMode::kSpn: return "spn";
  }
  return "?";
}

Encryption Encryption::parse(const std::string& text) {
  if (text == "none") return {EncryptionMode::kNone, 1};
  if (text == "rs") return {EncryptionMode::kRs, 1};
  if (text == "mi") return {EncryptionMode::kMi, 1};
  if (text == "rs+mi") return {EncryptionMode::kRsThenMi, 1};
  if (text == "mi+rs") return {EncryptionMode::kMiThenRs, 1};
  if (text == "spn") return {EncryptionMode::kSpn, 2};
  throw ConfigError("unknown encryption mode '" + text + "' (none|rs|mi|rs+mi|mi+rs|spn)");
}

std::size_t input_dim(const Encryption& enc, std::size_t patch_size, std::size_t channels) {
  return enc.mixes() ? (patch_size / 2) * (patch_size / 2) * channels
                     : patch_size * patch_size * channels;
}

Tensor encrypt_for_model(const Image& img, const Encryption& enc, const Sampling& sampling,
                         std::uint64_t seed) {
  PatchGrid grid = split_patches(img, sampling.patch_size, sampling.interval);
  if (sampling.drop_ratio > 0.0) {
    grid = drop_patches(grid, sampling.drop_ratio, derive_seed(seed, 1));
  }
  const std::size_t dim = input_dim(enc, sampling.patch_size, img.channels);
  auto key = [&] { return gen_key(seed, grid.size()); };
  switch (enc.mode) {
    case EncryptionMode::kNone:
      return pevit::patch_matrix(grid);
    case EncryptionMode::kRs:
      return pevit::patch_matrix(rs_encrypt(grid, key()));
    case EncryptionMode::kMi:
      return rows_of(mix_slots(grid), dim);
    case EncryptionMode::kRsThenMi:
      return rows_of(mix_slots(rs_encrypt(grid, key())), dim);
    case EncryptionMode::kMiThenRs: {
      const MixedSlots mixed = mix_slots(grid);
      const PermutationKey k = key();
      MixedSlots shuffled;
      shuffled.reserve(mixed.size());
      for (std::size_t i = 0; i < mixed.size(); ++i) shuffled.push_back(mixed[k.perm[i]]);
      return rows_of(shuffled, dim);
    }
    case EncryptionMode::kSpn:
      if (grid.hole_count() > 0) throw ConfigError("spn: patch dropping is not supported");
      return pevit::mixed_matrix(spn_encrypt(grid, enc.rounds, seed));
  }
  throw InternalError("encrypt_for_model: unhandled mode");
}

Image encrypt_for_view(const Image& img, const Encryption& enc, std::size_t patch_size,
                       std::uint64_t seed) {
  if (enc.mode == EncryptionMode::kNone) return img;
  const PatchGrid grid = split_patches(img, patch_size, 0);
  switch (enc.mode) {
    case EncryptionMode::kRs:
      return assemble(rs_encrypt(grid, gen_key(seed, grid.size())));
    case EncryptionMode::kMi:
      return mixed_to_image(mi_encrypt(grid));
    case EncryptionMode::kRsThenMi:
      return mixed_to_image(mi_encrypt(rs_encrypt(grid, gen_key(seed, grid.size()))));
    case EncryptionMode::kMiThenRs:
      return mixed_to_image(rs_encrypt(mi_encrypt(grid), gen_key(seed, grid.size())));
    case EncryptionMode::kSpn:
      return mixed_to_image(spn_encrypt(grid, enc.rounds, seed));
    case EncryptionMode::kNone:
      break;
  }
  return img;
}

}  // namespace picrypt::harness
