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

namespace picrypt {

// 8-bit raster, row-major with interleaved channels.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  // Zero-filled image; throws GeometryError on channels outside {1, 3}.
  static Image blank(std::size_t height, std::size_t width, std::size_t channels);

  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * width + col) * channels + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * channels + ch];
  }

  // Throws GeometryError when the invariants do not hold.
  void validate() const;

  bool operator==(const Image&) const = default;
};

using PatchData = std::vector<std::uint8_t>;
// A patch record is either P*P*C pixel bytes or a hole (std::nullopt).
using PatchRecord = std::optional<PatchData>;

struct PatchGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_size = 0;
  std::size_t channels = 0;
  std::size_t interval = 0;
  std::vector<PatchRecord> patches;

  std::size_t size() const { return patches.size(); }
  std::size_t patch_values() const { return patch_size * patch_size * channels; }
  std::size_t hole_count() const;

  bool operator==(const PatchGrid&) const = default;
};

// Binary PPM (P6) / PGM (P5) with maxval 255.
Image decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);

Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& img, const std::filesystem::path& path);

// Grid dimension along one axis for side length `extent`.
std::size_t grid_extent(std::size_t extent, std::size_t patch_size, std::size_t interval);

// Samples P x P patches at stride P + interval from the top-left corner.
PatchGrid split_patches(const Image& img, std::size_t patch_size, std::size_t interval);

// Inverse of split_patches for hole-free grids with interval 0.
Image assemble(const PatchGrid& grid);

// Quadrants TL, TR, BL, BR of a P x P x C patch.
std::vector<PatchData> split_subpatches(const PatchData& patch, std::size_t patch_size,
                                        std::size_t channels);
PatchData join_subpatches(std::span<const PatchData> quadrants, std::size_t patch_size,
                          std::size_t channels);

}  // namespace picrypt
