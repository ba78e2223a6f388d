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

#include "picrypt/imgio.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "picrypt/errors.h"

namespace picrypt {

namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal field.
  std::size_t read_number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw DecodeError(std::string("pnm: malformed ") + field);
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 24)) throw DecodeError(std::string("pnm: ") + field + " too large");
      ++pos_;
    }
    return value;
  }

  // The single whitespace byte that separates maxval from the raster.
  void expect_single_space(const char* field) {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw DecodeError(std::string("pnm: missing whitespace after ") + field);
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image Image::blank(std::size_t height, std::size_t width, std::size_t channels) {
  Image img{height, width, channels, {}};
  if (channels != 1 && channels != 3) {
    throw GeometryError("image: channels must be 1 or 3, got " + std::to_string(channels));
  }
  img.pixels.assign(height * width * channels, 0);
  return img;
}

void Image::validate() const {
  if (channels != 1 && channels != 3) {
    throw GeometryError("image: channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (pixels.size() != height * width * channels) {
    throw GeometryError("image: pixel buffer holds " + std::to_string(pixels.size()) +
                        " values, expected " + std::to_string(height * width * channels));
  }
}

std::size_t PatchGrid::hole_count() const {
  return static_cast<std::size_t>(
      std::count_if(patches.begin(), patches.end(), [](const PatchRecord& p) { return !p; }));
}

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw DecodeError("pnm: bad magic (expected P6 or P5)");
  }
  const std::size_t channels = bytes[1] == '6' ? 3 : 1;
  HeaderReader reader(bytes.subspan(2));
  const std::size_t width = reader.read_number("width");
  const std::size_t height = reader.read_number("height");
  const std::size_t maxval = reader.read_number("maxval");
  if (width == 0) throw DecodeError("pnm: width must be positive");
  if (height == 0) throw DecodeError("pnm: height must be positive");
  if (maxval != 255) throw DecodeError("pnm: maxval must be 255, got " + std::to_string(maxval));
  reader.expect_single_space("maxval");

  const std::size_t offset = 2 + reader.pos();
  const std::size_t expected = width * height * channels;
  const std::size_t available = bytes.size() - offset;
  if (available < expected) {
    throw DecodeError("pnm: truncated payload (" + std::to_string(available) + " of " +
                      std::to_string(expected) + " bytes)");
  }
  if (available > expected) {
    throw DecodeError("pnm: payload has " + std::to_string(available - expected) +
                      " trailing bytes");
  }
  Image img{height, width, channels, {}};
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
  img.validate();
  const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

void save_ppm(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::size_t grid_extent(std::size_t extent, std::size_t patch_size, std::size_t interval) {
  if (patch_size > extent) return 0;
  return (extent - patch_size) / (patch_size + interval) + 1;
}

PatchGrid split_patches(const Image& img, std::size_t patch_size, std::size_t interval) {
  img.validate();
  if (patch_size < 2) throw GeometryError("split: patch size must be at least 2");
  if (patch_size > std::min(img.height, img.width)) {
    throw GeometryError("split: patch size " + std::to_string(patch_size) +
                        " exceeds image side " + std::to_string(std::min(img.height, img.width)));
  }
  if (interval == 0 && (img.height % patch_size != 0 || img.width % patch_size != 0)) {
    throw GeometryError("split: " + std::to_string(img.height) + "x" +
                        std::to_string(img.width) + " is not divisible by patch size " +
                        std::to_string(patch_size));
  }
  PatchGrid grid;
  grid.rows = grid_extent(img.height, patch_size, interval);
  grid.cols = grid_extent(img.width, patch_size, interval);
  grid.patch_size = patch_size;
  grid.channels = img.channels;
  grid.interval = interval;
  grid.patches.reserve(grid.rows * grid.cols);

  const std::size_t stride = patch_size + interval;
  const std::size_t row_bytes = patch_size * img.channels;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      PatchData patch(grid.patch_values());
      for (std::size_t y = 0; y < patch_size; ++y) {
        const auto src = img.pixels.begin() +
                         static_cast<std::ptrdiff_t>(((r * stride + y) * img.width + c * stride) *
                                                     img.channels);
        std::copy(src, src + static_cast<std::ptrdiff_t>(row_bytes),
                  patch.begin() + static_cast<std::ptrdiff_t>(y * row_bytes));
      }
      grid.patches.emplace_back(std::move(patch));
    }
  }
  return grid;
}

Image assemble(const PatchGrid& grid) {
  if (grid.interval != 0) {
    throw GeometryError("assemble: grids sampled with interval > 0 cannot be reassembled");
  }
  if (grid.patches.size() != grid.rows * grid.cols) {
    throw GeometryError("assemble: grid holds " + std::to_string(grid.patches.size()) +
                        " patches, expected " + std::to_string(grid.rows * grid.cols));
  }
  const std::size_t p = grid.patch_size;
  Image img = Image::blank(grid.rows * p, grid.cols * p, grid.channels);
  const std::size_t row_bytes = p * grid.channels;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const PatchRecord& rec = grid.patches[r * grid.cols + c];
      if (!rec) {
        throw GeometryError("assemble: hole at slot " + std::to_string(r * grid.cols + c));
      }
      if (rec->size() != grid.patch_values()) {
        throw GeometryError("assemble: patch " + std::to_string(r * grid.cols + c) +
                            " has wrong size");
      }
      for (std::size_t y = 0; y < p; ++y) {
        std::copy_n(rec->begin() + static_cast<std::ptrdiff_t>(y * row_bytes), row_bytes,
                    img.pixels.begin() +
                        static_cast<std::ptrdiff_t>(((r * p + y) * img.width + c * p) *
                                                    grid.channels));
      }
    }
  }
  return img;
}

std::vector<PatchData> split_subpatches(const PatchData& patch, std::size_t patch_size,
                                        std::size_t channels) {
  if (patch_size % 2 != 0) {
    throw GeometryError("subpatches: patch size " + std::to_string(patch_size) + " is odd");
  }
  if (patch.size() != patch_size * patch_size * channels) {
    throw GeometryError("subpatches: patch holds " + std::to_string(patch.size()) +
                        " values, expected " + std::to_string(patch_size * patch_size * channels));
  }
  const std::size_t half = patch_size / 2;
  std::vector<PatchData> quads(4, PatchData(half * half * channels));
  for (std::size_t q = 0; q < 4; ++q) {
    const std::size_t oy = (q / 2) * half;
    const std::size_t ox = (q % 2) * half;
    for (std::size_t y = 0; y < half; ++y) {
      for (std::size_t x = 0; x < half; ++x) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
          quads[q][(y * half + x) * channels + ch] =
              patch[((oy + y) * patch_size + ox + x) * channels + ch];
        }
      }
    }
  }
  return quads;
}

PatchData join_subpatches(std::span<const PatchData> quadrants, std::size_t patch_size,
                          std::size_t channels) {
  if (patch_size % 2 != 0) {
    throw GeometryError("subpatches: patch size " + std::to_string(patch_size) + " is odd");
  }
  const std::size_t half = patch_size / 2;
  if (quadrants.size() != 4) throw GeometryError("subpatches: expected 4 quadrants");
  PatchData patch(patch_size * patch_size * channels);
  for (std::size_t q = 0; q < 4; ++q) {
    if (quadrants[q].size() != half * half * channels) {
      throw GeometryError("subpatches: quadrant " + std::to_string(q) + " has wrong size");
    }
    const std::size_t oy = (q / 2) * half;
    const std::size_t ox = (q % 2) * half;
    for (std::size_t y = 0; y < half; ++y) {
      for (std::size_t x = 0; x < half; ++x) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
          patch[((oy + y) * patch_size + ox + x) * channels + ch] =
              quadrants[q][(y * half + x) * channels + ch];
        }
      }
    }
  }
  return patch;
}

}  // namespace picrypt
