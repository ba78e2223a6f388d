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

#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/prng.h"

namespace picrypt::harness {

std::size_t count_white_squares(const Image& img, std::size_t size) {
  if (size == 0 || img.height < size || img.width < size) return 0;
  // run[x] = number of consecutive all-white pixels ending at (y, x) in column x.
  std::vector<std::size_t> column_run(img.width, 0);
  std::size_t count = 0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      bool white = true;
      for (std::size_t ch = 0; ch < img.channels; ++ch) white = white && img.at(y, x, ch) == 255;
      column_run[x] = white ? column_run[x] + 1 : 0;
    }
    std::size_t row_run = 0;
    for (std::size_t x = 0; x < img.width; ++x) {
      row_run = column_run[x] >= size ? row_run + 1 : 0;
      if (row_run >= size) ++count;
    }
  }
  return count;
}

double leakage_ratio(const Detector& detector, std::span<const Image> corpus,
                     const Encryption& enc, std::size_t patch_size, std::uint64_t seed) {
  std::size_t original = 0, encrypted = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    original += detector(corpus[i]);
    encrypted += detector(encrypt_for_view(corpus[i], enc, patch_size, derive_seed(seed, i)));
  }
  if (original == 0) {
    throw ConfigError("leakage: detector found nothing on the original corpus; ratio undefined");
  }
  return static_cast<double>(encrypted) / static_cast<double>(original);
}

}  // namespace picrypt::harness
