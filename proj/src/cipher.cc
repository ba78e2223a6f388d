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

#include "picrypt/cipher.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "picrypt/errors.h"
#include "picrypt/prng.h"

namespace picrypt {

namespace {

template <typename T>
std::vector<T> permute_slots(const std::vector<T>& items, const PermutationKey& key) {
  if (key.n != items.size() || key.perm.size() != items.size()) {
    throw KeyError("rs: key covers " + std::to_string(key.n) + " patches, grid has " +
                   std::to_string(items.size()));
  }
  std::vector<T> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back(items[key.perm[i]]);
  return out;
}

template <typename Int>
Int parse_int(std::string_view text, const char* field) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw KeyError(std::string("key: malformed ") + field + " '" + std::string(text) + "'");
  }
  return value;
}

std::string_view expect_field(std::string_view line, std::string_view prefix) {
  if (line.substr(0, prefix.size()) != prefix) {
    throw KeyError("key: expected line starting with '" + std::string(prefix) + "'");
  }
  return line.substr(prefix.size());
}

}  // namespace

PermutationKey gen_key(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw KeyError("gen_key: n must be at least 1");
  PermutationKey key{n, seed, std::vector<std::size_t>(n)};
  std::iota(key.perm.begin(), key.perm.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i >= 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(key.perm[i], key.perm[j]);
  }
  return key;
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size(), perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= perm.size() || inv[perm[i]] != perm.size()) {
      throw KeyError("permutation: not a bijection");
    }
    inv[perm[i]] = i;
  }
  return inv;
}

PatchGrid rs_encrypt(const PatchGrid& grid, const PermutationKey& key) {
  PatchGrid out = grid;
  out.patches = permute_slots(grid.patches, key);
  return out;
}

PatchGrid rs_decrypt(const PatchGrid& grid, const PermutationKey& key) {
  PermutationKey inverse = key;
  inverse.perm = invert_permutation(key.perm);
  PatchGrid out = grid;
  out.patches = permute_slots(grid.patches, inverse);
  return out;
}

MixedGrid rs_encrypt(const MixedGrid& grid, const PermutationKey& key) {
  MixedGrid out = grid;
  out.patches = permute_slots(grid.patches, key);
  return out;
}

std::vector<double> mix_subpatches(std::span<const PatchData> quadrants) {
  if (quadrants.size() != 4) throw GeometryError("mi: exactly 4 sub-patches are mixed");
  const std::size_t len = quadrants[0].size();
  std::vector<double> mixed(len);
  for (std::size_t i = 0; i < len; ++i) {
    unsigned sum = 0;
    for (const auto& q : quadrants) {
      if (q.size() != len) throw GeometryError("mi: sub-patch sizes differ");
      sum += q[i];
    }
    mixed[i] = static_cast<double>(sum) / (4.0 * 255.0);
  }
  return mixed;
}

MixedGrid mi_encrypt(const PatchGrid& grid) {
  if (grid.patch_size % 2 != 0) {
    throw GeometryError("mi: patch size " + std::to_string(grid.patch_size) + " is odd");
  }
  MixedGrid out{grid.rows, grid.cols, grid.patch_size, grid.channels, {}};
  out.patches.reserve(grid.patches.size());
  for (std::size_t i = 0; i < grid.patches.size(); ++i) {
    if (!grid.patches[i]) throw GeometryError("mi: hole at slot " + std::to_string(i));
    const auto quads = split_subpatches(*grid.patches[i], grid.patch_size, grid.channels);
    out.patches.push_back(mix_subpatches(quads));
  }
  return out;
}

MixedGrid spn_encrypt(const PatchGrid& grid, std::size_t rounds, std::uint64_t seed) {
  if (rounds == 0) throw KeyError("spn: rounds must be at least 1");
  SplitMix64 schedule(seed);
  MixedGrid state = mi_encrypt(rs_encrypt(grid, gen_key(schedule.next(), grid.size())));

  const std::size_t sub_rows = 2 * state.rows;
  const std::size_t sub_cols = 2 * state.cols;
  for (std::size_t round = 1; round < rounds; ++round) {
    const PermutationKey key = gen_key(schedule.next(), sub_rows * sub_cols);
    // Block (R, C) of the tiled state is the mixed value of patch (R/2, C/2).
    auto block = [&](std::size_t index) -> const std::vector<double>& {
      const std::size_t r = index / sub_cols;
      const std::size_t c = index % sub_cols;
      return state.patches[(r / 2) * state.cols + c / 2];
    };
    MixedGrid next = state;
    for (std::size_t r = 0; r < state.rows; ++r) {
      for (std::size_t c = 0; c < state.cols; ++c) {
        const std::size_t slots[4] = {(2 * r) * sub_cols + 2 * c, (2 * r) * sub_cols + 2 * c + 1,
                                      (2 * r + 1) * sub_cols + 2 * c,
                                      (2 * r + 1) * sub_cols + 2 * c + 1};
        auto& out = next.patches[r * state.cols + c];
        for (std::size_t i = 0; i < out.size(); ++i) {
          double sum = 0.0;
          for (std::size_t s : slots) sum += block(key.perm[s])[i];
          out[i] = sum * 0.25;
        }
      }
    }
    state = std::move(next);
  }
  return state;
}

Image mixed_to_image(const MixedGrid& grid) {
  const std::size_t p = grid.patch_size;
  const std::size_t half = p / 2;
  Image img = Image::blank(grid.rows * p, grid.cols * p, grid.channels);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const auto& mixed = grid.patches[r * grid.cols + c];
      if (mixed.size() != grid.mixed_values()) {
        throw GeometryError("mixed image: patch " + std::to_string(r * grid.cols + c) +
                            " has wrong size");
      }
      for (std::size_t y = 0; y < p; ++y) {
        for (std::size_t x = 0; x < p; ++x) {
          for (std::size_t ch = 0; ch < grid.channels; ++ch) {
            const double v = mixed[((y % half) * half + x % half) * grid.channels + ch];
            const double q = std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0);
            img.at(r * p + y, c * p + x, ch) = static_cast<std::uint8_t>(q);
          }
        }
      }
    }
  }
  return img;
}

boost::multiprecision::cpp_int keyspace(std::size_t n) {
  boost::multiprecision::cpp_int result = 1;
  for (std::size_t i = 2; i <= n; ++i) result *= i;
  return result;
}

PatchGrid drop_patches(const PatchGrid& grid, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw GeometryError("drop: ratio must lie in [0, 1)");
  }
  PatchGrid out = grid;
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(grid.size())));
  if (count == 0) return out;
  // The first `count` entries of a keyed permutation are the dropped slots.
  const PermutationKey order = gen_key(seed, grid.size());
  for (std::size_t i = 0; i < count; ++i) out.patches[order.perm[i]].reset();
  return out;
}

std::string format_key(const PermutationKey& key) {
  std::ostringstream out;
  out << "PICRYPT-KEY 1\n"
      << "n=" << key.n << "\n"
      << "seed=" << key.seed << "\n"
      << "perm=";
  for (std::size_t i = 0; i < key.perm.size(); ++i) out << (i ? "," : "") << key.perm[i];
  out << "\n";
  return out.str();
}

PermutationKey parse_key(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
  if (lines.size() != 4) {
    throw KeyError("key: expected 4 lines, found " + std::to_string(lines.size()));
  }
  if (lines[0] != "PICRYPT-KEY 1") throw KeyError("key: bad header line");
  PermutationKey key;
  key.n = parse_int<std::size_t>(expect_field(lines[1], "n="), "n");
  key.seed = parse_int<std::uint64_t>(expect_field(lines[2], "seed="), "seed");
  std::string_view perm = expect_field(lines[3], "perm=");
  while (true) {
    const auto comma = perm.find(',');
    key.perm.push_back(parse_int<std::size_t>(perm.substr(0, comma), "perm entry"));
    if (comma == std::string_view::npos) break;
    perm = perm.substr(comma + 1);
  }
  if (key.perm.size() != key.n) {
    throw KeyError("key: perm has " + std::to_string(key.perm.size()) + " entries, n=" +
                   std::to_string(key.n));
  }
  if (key.n == 0 || gen_key(key.seed, key.n).perm != key.perm) {
    throw KeyError("key: perm does not match (seed, n)");
  }
  return key;
}

void save_key(const PermutationKey& key, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_key(key);
  if (!out) throw IoError("write failed for " + path.string());
}

PermutationKey load_key(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_key(text);
}

}  // namespace picrypt
