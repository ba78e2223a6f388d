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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picrypt/cipher.h"
#include "picrypt/imgio.h"
#include "picrypt/pevit.h"

namespace picrypt::attacks {

enum class Relation { kRightOf, kBelow };

// Sum of squared differences across the seam between two patches, with
// pixels scaled to [0, 1]. kRightOf compares a's last column with b's first
// column; kBelow compares a's last row with b's first row.
double edge_dissimilarity(const PatchData& a, const PatchData& b, Relation relation,
                          std::size_t patch_size, std::size_t channels);

// Slot -> patch index assignment for a rows x cols puzzle.
struct Arrangement {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::optional<std::size_t>> placement;

  static Arrangement empty(std::size_t rows, std::size_t cols);
  std::optional<std::size_t>& at(std::size_t r, std::size_t c) { return placement[r * cols + c]; }
  const std::optional<std::size_t>& at(std::size_t r, std::size_t c) const {
    return placement[r * cols + c];
  }
  // "slot r c -> patch i", one line per filled slot.
  std::string dump() const;

  bool operator==(const Arrangement&) const = default;
};

// Where each patch of an RS-shuffled sequence truly belongs: slot key.perm[i]
// holds shuffled patch i. Holes in `shuffled` leave their slot empty.
Arrangement truth_arrangement(std::span<const PatchRecord> shuffled, const PermutationKey& key,
                              std::size_t rows, std::size_t cols);

// Greedy kernel-growing solver. Seeds with the lowest-dissimilarity pair,
// then repeatedly places the (patch, slot) with the lowest summed
// dissimilarity to already-placed neighbours, keeping the placed block inside
// a rows x cols frame. Ties go to the lower patch index, then the earlier slot.
Arrangement jigsaw_solve(std::span<const PatchRecord> patches, std::size_t rows, std::size_t cols,
                         std::size_t patch_size, std::size_t channels);

struct PuzzleMetrics {
  double direct = 0.0;
  double neighbor = 0.0;
};

PuzzleMetrics puzzle_metrics(const Arrangement& found, const Arrangement& truth);

// Reassembles an image from an arrangement; empty slots are black.
Image render_arrangement(const Arrangement& arrangement, std::span<const PatchRecord> patches,
                         std::size_t patch_size, std::size_t channels);

// Dominant left singular direction of a rows x cols row-major matrix by
// power iteration on G G^T, sign-fixed so the largest-magnitude entry is
// positive. Empty when the matrix is zero.
std::optional<std::vector<double>> grad_leak_invert(std::span<const double> grad,
                                                    std::size_t rows, std::size_t cols);

// Gradient of the cross-entropy loss w.r.t. the patch embedding when the
// model sees exactly one patch (a 1 x patch_dim row).
std::vector<double> single_token_embedding_gradient(const tensor::Tensor& patch,
                                                    const pevit::ModelParams& params,
                                                    const pevit::ModelConfig& config,
                                                    std::size_t label);

double pearson(std::span<const double> a, std::span<const double> b);

struct GradLeakResult {
  // Recovered unit directions per ciphertext slot (empty on failure).
  std::vector<std::vector<double>> recovered;
  std::size_t failures = 0;
  // Smallest cosine between a recovered direction and its ciphertext patch.
  double min_cipher_cosine = 1.0;
  // Mean correlation with the plaintext patch at the same slot.
  double plain_correlation = 0.0;
  // Same statistic under random slot pairings.
  double chance_mean = 0.0;
  double chance_std = 0.0;
};

// Inverts per-slot single-token gradients of an RS-encrypted grid and
// compares what comes out with the ciphertext and the plaintext.
GradLeakResult gradient_leakage_attack(const PatchGrid& plaintext, const PermutationKey& key,
                                       const pevit::ModelParams& params,
                                       const pevit::ModelConfig& config,
                                       std::size_t chance_trials, std::uint64_t seed);

// Four sub-patches whose mean is exactly `mixed`: mixed + d_i with
// d_1..d_3 uniform in [-amplitude, amplitude] and d_4 = -(d_1 + d_2 + d_3).
std::array<std::vector<double>, 4> mi_collision(std::span<const double> mixed,
                                                std::uint64_t seed, double amplitude = 0.25);

}  // namespace picrypt::attacks
