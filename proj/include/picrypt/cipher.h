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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "picrypt/imgio.h"

namespace picrypt {

// Secret of the patch-shuffling (RS) cipher. `perm` is always the
// Fisher-Yates permutation derived from `seed`, so the seed alone is the key.
struct PermutationKey {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> perm;

  bool operator==(const PermutationKey&) const = default;
};

// Patch grid after sub-patch mixing. Each entry is the elementwise mean of
// the four P/2 x P/2 quadrants of the source patch, i.e. (P/2)^2 * C reals in
// [0, 1]. Geometry fields describe the source grid.
struct MixedGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_size = 0;
  std::size_t channels = 0;
  std::vector<std::vector<double>> patches;

  std::size_t mixed_values() const {
    return (patch_size / 2) * (patch_size / 2) * channels;
  }
  bool operator==(const MixedGrid&) const = default;
};

PermutationKey gen_key(std::uint64_t seed, std::size_t n);
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);

// Output slot i receives input patch key.perm[i].
PatchGrid rs_encrypt(const PatchGrid& grid, const PermutationKey& key);
PatchGrid rs_decrypt(const PatchGrid& grid, const PermutationKey& key);
// Same slot mapping as rs_encrypt, applied to mixed patches.
MixedGrid rs_encrypt(const MixedGrid& grid, const PermutationKey& key);

// Mean of four equally sized quadrants. The integer sum is exact, so the
// result does not depend on quadrant order.
std::vector<double> mix_subpatches(std::span<const PatchData> quadrants);

MixedGrid mi_encrypt(const PatchGrid& grid);

// Alternating RS / MI rounds. Round 0 shuffles whole patches with the first
// sub-key and mixes. Every later round shuffles the (2 rows) x (2 cols) grid
// of half-size blocks with a fresh sub-key and mixes again, so content keeps
// diffusing across patch boundaries.
MixedGrid spn_encrypt(const PatchGrid& grid, std::size_t rounds, std::uint64_t seed);

// Viewable rendering of a mixed grid: each mixed block is tiled into all four
// quadrants of its patch and quantized with round-half-to-even.
Image mixed_to_image(const MixedGrid& grid);

// Number of RS keys for n patches (n!).
boost::multiprecision::cpp_int keyspace(std::size_t n);

// Replaces floor(ratio * n) PRNG-selected patches with holes.
PatchGrid drop_patches(const PatchGrid& grid, double ratio, std::uint64_t seed);

std::string format_key(const PermutationKey& key);
// Parses the text key format and verifies perm against (seed, n).
PermutationKey parse_key(std::string_view text);
void save_key(const PermutationKey& key, const std::filesystem::path& path);
PermutationKey load_key(const std::filesystem::path& path);

}  // namespace picrypt
