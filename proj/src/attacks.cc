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

#include "picrypt/attacks.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "picrypt/errors.h"
#include "picrypt/prng.h"

namespace picrypt::attacks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Offset {
  long dr;
  long dc;
};

}  // namespace

double edge_dissimilarity(const PatchData& a, const PatchData& b, Relation relation,
                          std::size_t patch_size, std::size_t channels) {
  const std::size_t expected = patch_size * patch_size * channels;
  if (a.size() != expected || b.size() != expected) {
    throw GeometryError("dissimilarity: patch sizes " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()) + " do not match " + std::to_string(expected));
  }
  const std::size_t p = patch_size;
  double total = 0.0;
  for (std::size_t t = 0; t < p; ++t) {
    // Seam pixel pair t: (row t, last col | first col) or (last row | first row, col t).
    const std::size_t ia = relation == Relation::kRightOf ? t * p + (p - 1) : (p - 1) * p + t;
    const std::size_t ib = relation == Relation::kRightOf ? t * p : t;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const double d = (static_cast<double>(a[ia * channels + ch]) -
                        static_cast<double>(b[ib * channels + ch])) /
                       255.0;
      total += d * d;
    }
  }
  return total;
}

Arrangement Arrangement::empty(std::size_t rows, std::size_t cols) {
  return Arrangement{rows, cols, std::vector<std::optional<std::size_t>>(rows * cols)};
}

std::string Arrangement::dump() const {
  std::ostringstream out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (const auto& p = at(r, c)) out << "slot " << r << " " << c << " -> patch " << *p << "\n";
    }
  }
  return out.str();
}

Arrangement truth_arrangement(std::span<const PatchRecord> shuffled, const PermutationKey& key,
                              std::size_t rows, std::size_t cols) {
  if (key.perm.size() != shuffled.size() || rows * cols != shuffled.size()) {
    throw KeyError("truth: key, grid and sequence sizes disagree");
  }
  Arrangement truth = Arrangement::empty(rows, cols);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    if (shuffled[i]) truth.placement[key.perm[i]] = i;
  }
  return truth;
}

Arrangement jigsaw_solve(std::span<const PatchRecord> patches, std::size_t rows, std::size_t cols,
                         std::size_t patch_size, std::size_t channels) {
  std::vector<std::size_t> pieces;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i]) pieces.push_back(i);
  }
  if (pieces.size() > rows * cols) {
    throw GeometryError("jigsaw: " + std::to_string(pieces.size()) + " patches exceed " +
                        std::to_string(rows * cols) + " slots");
  }
  Arrangement result = Arrangement::empty(rows, cols);
  const std::size_t m = pieces.size();
  if (m == 0) return result;
  if (m == 1) {
    result.at(0, 0) = pieces[0];
    return result;
  }

  // right[i*m+j]: piece j placed right of piece i; below likewise.
  std::vector<double> right(m * m, kInf), below(m * m, kInf);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const auto& a = *patches[pieces[i]];
      const auto& b = *patches[pieces[j]];
      right[i * m + j] = edge_dissimilarity(a, b, Relation::kRightOf, patch_size, channels);
      below[i * m + j] = edge_dissimilarity(a, b, Relation::kBelow, patch_size, channels);
    }
  }

  // Canvas large enough to grow the frame in any direction from its centre.
  const long canvas_rows = static_cast<long>(3 * rows);
  const long canvas_cols = static_cast<long>(3 * cols);
  std::vector<long> canvas(static_cast<std::size_t>(canvas_rows * canvas_cols), -1);
  auto cell = [&](long r, long c) -> long& {
    return canvas[static_cast<std::size_t>(r * canvas_cols + c)];
  };
  long min_r = static_cast<long>(rows), max_r = min_r;
  long min_c = static_cast<long>(cols), max_c = min_c;
  std::vector<bool> placed(m, false);

  // Seed pair. Relation order: right, below, left, above.
  const Offset offsets[4] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};
  double best = kInf;
  std::size_t seed_i = 0, seed_j = 1;
  int seed_rel = -1;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double costs[4] = {right[i * m + j], below[i * m + j], right[j * m + i],
                               below[j * m + i]};
      for (int rel = 0; rel < 4; ++rel) {
        if (offsets[rel].dc != 0 && cols < 2) continue;
        if (offsets[rel].dr != 0 && rows < 2) continue;
        if (costs[rel] < best) {
          best = costs[rel];
          seed_i = i;
          seed_j = j;
          seed_rel = rel;
        }
      }
    }
  }
  if (seed_rel < 0) throw InternalError("jigsaw: no admissible seed pair");
  cell(min_r, min_c) = static_cast<long>(seed_i);
  placed[seed_i] = true;
  {
    const long r = min_r + offsets[seed_rel].dr;
    const long c = min_c + offsets[seed_rel].dc;
    cell(r, c) = static_cast<long>(seed_j);
    placed[seed_j] = true;
    min_r = std::min(min_r, r);
    max_r = std::max(max_r, r);
    min_c = std::min(min_c, c);
    max_c = std::max(max_c, c);
  }

  struct Candidate {
    long r, c;
    long left, right, up, down;  // neighbour pieces or -1
  };
  for (std::size_t step = 2; step < m; ++step) {
    std::vector<Candidate> candidates;
    for (long r = std::max(0L, min_r - 1); r <= std::min(canvas_rows - 1, max_r + 1); ++r) {
      for (long c = std::max(0L, min_c - 1); c <= std::min(canvas_cols - 1, max_c + 1); ++c) {
        if (cell(r, c) >= 0) continue;
        const long height = std::max(max_r, r) - std::min(min_r, r) + 1;
        const long width = std::max(max_c, c) - std::min(min_c, c) + 1;
        if (height > static_cast<long>(rows) || width > static_cast<long>(cols)) continue;
        Candidate cand{r, c, -1, -1, -1, -1};
        if (c > 0) cand.left = cell(r, c - 1);
        if (c + 1 < canvas_cols) cand.right = cell(r, c + 1);
        if (r > 0) cand.up = cell(r - 1, c);
        if (r + 1 < canvas_rows) cand.down = cell(r + 1, c);
        if (cand.left < 0 && cand.right < 0 && cand.up < 0 && cand.down < 0) continue;
        candidates.push_back(cand);
      }
    }
    if (candidates.empty()) throw InternalError("jigsaw: no free slot adjacent to the kernel");

    double best_cost = kInf;
    std::size_t best_piece = 0;
    const Candidate* best_slot = nullptr;
    for (std::size_t p = 0; p < m; ++p) {
      if (placed[p]) continue;
      for (const auto& cand : candidates) {
        double cost = 0.0;
        if (cand.left >= 0) cost += right[static_cast<std::size_t>(cand.left) * m + p];
        if (cand.right >= 0) cost += right[p * m + static_cast<std::size_t>(cand.right)];
        if (cand.up >= 0) cost += below[static_cast<std::size_t>(cand.up) * m + p];
        if (cand.down >= 0) cost += below[p * m + static_cast<std::size_t>(cand.down)];
        if (cost < best_cost) {
          best_cost = cost;
          best_piece = p;
          best_slot = &cand;
        }
      }
    }
    if (!best_slot) throw InternalError("jigsaw: no placement found");
    cell(best_slot->r, best_slot->c) = static_cast<long>(best_piece);
    placed[best_piece] = true;
    min_r = std::min(min_r, best_slot->r);
    max_r = std::max(max_r, best_slot->r);
    min_c = std::min(min_c, best_slot->c);
    max_c = std::max(max_c, best_slot->c);
  }

  for (long r = min_r; r <= max_r; ++r) {
    for (long c = min_c; c <= max_c; ++c) {
      if (cell(r, c) >= 0) {
        result.at(static_cast<std::size_t>(r - min_r), static_cast<std::size_t>(c - min_c)) =
            pieces[static_cast<std::size_t>(cell(r, c))];
      }
    }
  }
  return result;
}

PuzzleMetrics puzzle_metrics(const Arrangement& found, const Arrangement& truth) {
  if (found.rows != truth.rows || found.cols != truth.cols ||
      found.placement.size() != truth.placement.size()) {
    throw GeometryError("metrics: arrangement geometries differ");
  }
  const long rows = static_cast<long>(truth.rows);
  const long cols = static_cast<long>(truth.cols);
  std::size_t max_index = 0;
  for (const auto& s : truth.placement) {
    if (s) max_index = std::max(max_index, *s + 1);
  }
  for (const auto& s : found.placement) {
    if (s) max_index = std::max(max_index, *s + 1);
  }
  constexpr long kAbsent = -1;
  std::vector<long> found_pos(max_index, kAbsent), truth_pos(max_index, kAbsent);
  for (long s = 0; s < rows * cols; ++s) {
    if (const auto& p = found.placement[static_cast<std::size_t>(s)]) found_pos[*p] = s;
    if (const auto& p = truth.placement[static_cast<std::size_t>(s)]) truth_pos[*p] = s;
  }

  PuzzleMetrics metrics{1.0, 1.0};
  std::size_t total = 0;
  for (long t : truth_pos) total += t != kAbsent;
  if (total > 0) {
    std::size_t best = 0;
    for (long dr = -(rows - 1); dr <= rows - 1; ++dr) {
      for (long dc = -(cols - 1); dc <= cols - 1; ++dc) {
        std::size_t hits = 0;
        for (std::size_t p = 0; p < max_index; ++p) {
          if (truth_pos[p] == kAbsent || found_pos[p] == kAbsent) continue;
          const long fr = found_pos[p] / cols + dr;
          const long fc = found_pos[p] % cols + dc;
          if (fr * cols + fc == truth_pos[p] && fc >= 0 && fc < cols) ++hits;
        }
        best = std::max(best, hits);
      }
    }
    metrics.direct = static_cast<double>(best) / static_cast<double>(total);
  }

  std::size_t pairs = 0, correct = 0;
  auto check = [&](const std::optional<std::size_t>& a, const std::optional<std::size_t>& b,
                   long delta_r, long delta_c) {
    if (!a || !b) return;
    ++pairs;
    const long fa = found_pos[*a], fb = found_pos[*b];
    if (fa == kAbsent || fb == kAbsent) return;
    if (fb / cols - fa / cols == delta_r && fb % cols - fa % cols == delta_c) ++correct;
  };
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      const auto& here = truth.placement[static_cast<std::size_t>(r * cols + c)];
      if (c + 1 < cols) check(here, truth.placement[static_cast<std::size_t>(r * cols + c + 1)], 0, 1);
      if (r + 1 < rows) check(here, truth.placement[static_cast<std::size_t>((r + 1) * cols + c)], 1, 0);
    }
  }
  if (pairs > 0) metrics.neighbor = static_cast<double>(correct) / static_cast<double>(pairs);
  return metrics;
}

Image render_arrangement(const Arrangement& arrangement, std::span<const PatchRecord> patches,
                         std::size_t patch_size, std::size_t channels) {
  PatchGrid grid{arrangement.rows, arrangement.cols, patch_size, channels, 0, {}};
  const PatchData black(patch_size * patch_size * channels, 0);
  for (const auto& slot : arrangement.placement) {
    if (slot && *slot < patches.size() && patches[*slot]) {
      grid.patches.push_back(patches[*slot]);
    } else {
      grid.patches.push_back(black);
    }
  }
  return assemble(grid);
}

std::optional<std::vector<double>> grad_leak_invert(std::span<const double> grad,
                                                    std::size_t rows, std::size_t cols) {
  if (grad.size() != rows * cols) {
    throw ShapeError("gradleak: matrix holds " + std::to_string(grad.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
  if (rows == 0 || cols == 0) return std::nullopt;
  auto normalize = [](std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return false;
    for (double& x : v) x /= n;
    return true;
  };

  // Start from the column with the largest norm; for a rank-one gradient it
  // already is the answer.
  std::size_t best_col = 0;
  double best_norm = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    double n = 0.0;
    for (std::size_t i = 0; i < rows; ++i) n += grad[i * cols + j] * grad[i * cols + j];
    if (n > best_norm) {
      best_norm = n;
      best_col = j;
    }
  }
  if (best_norm == 0.0) return std::nullopt;
  std::vector<double> v(rows);
  for (std::size_t i = 0; i < rows; ++i) v[i] = grad[i * cols + best_col];
  normalize(v);

  constexpr int kIterations = 100;
  constexpr double kTolerance = 1e-10;
  std::vector<double> t(cols), w(rows);
  for (int it = 0; it < kIterations; ++it) {
    std::fill(t.begin(), t.end(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) t[j] += grad[i * cols + j] * v[i];
    }
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += grad[i * cols + j] * t[j];
      w[i] = s;
    }
    if (!normalize(w)) return std::nullopt;
    double delta = 0.0;
    for (std::size_t i = 0; i < rows; ++i) delta = std::max(delta, std::abs(w[i] - v[i]));
    v.swap(w);
    if (delta < kTolerance) break;
  }
  const auto largest = std::max_element(v.begin(), v.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  if (*largest < 0) {
    for (double& x : v) x = -x;
  }
  return v;
}

std::vector<double> single_token_embedding_gradient(const tensor::Tensor& patch,
                                                    const pevit::ModelParams& params,
                                                    const pevit::ModelConfig& config,
                                                    std::size_t label) {
  if (patch.rank() != 2 || patch.dim(0) != 1) {
    throw ShapeError("gradleak: expected exactly one patch row, got " +
                     tensor::shape_string(patch.shape()));
  }
  for (const auto& p : params.named()) {
    auto t = p.tensor;
    t.zero_grad();
  }
  const tensor::Tensor loss =
      tensor::cross_entropy(pevit::forward(patch, params, config), label);
  tensor::backward(loss);
  const auto g = params.patch_embed.grad();
  std::vector<double> out(g.begin(), g.end());
  if (out.empty()) out.assign(params.patch_embed.numel(), 0.0);
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("pearson: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

GradLeakResult gradient_leakage_attack(const PatchGrid& plaintext, const PermutationKey& key,
                                       const pevit::ModelParams& params,
                                       const pevit::ModelConfig& config,
                                       std::size_t chance_trials, std::uint64_t seed) {
  const PatchGrid cipher = rs_encrypt(plaintext, key);
  const std::size_t n = cipher.size();
  const std::size_t dim = cipher.patch_values();
  auto as_real = [](const PatchRecord& rec) {
    std::vector<double> v;
    if (rec) {
      for (auto b : *rec) v.push_back(static_cast<double>(b) / 255.0);
    }
    return v;
  };

  GradLeakResult result;
  result.recovered.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = as_real(cipher.patches[i]);
    if (x.empty()) {
      ++result.failures;
      continue;
    }
    const auto grad = single_token_embedding_gradient(tensor::Tensor::from({1, dim}, x), params,
                                                      config, i % config.classes);
    auto direction = grad_leak_invert(grad, dim, config.embed_dim);
    if (!direction) {
      ++result.failures;
      continue;
    }
    double dot = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      dot += (*direction)[k] * x[k];
      norm += x[k] * x[k];
    }
    result.min_cipher_cosine = std::min(result.min_cipher_cosine, dot / std::sqrt(norm));
    result.recovered[i] = std::move(*direction);
  }

  auto mean_correlation = [&](const std::vector<std::size_t>& pairing) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto plain = as_real(plaintext.patches[pairing[i]]);
      if (result.recovered[i].empty() || plain.empty()) continue;
      total += pearson(result.recovered[i], plain);
      ++count;
    }
    return count ? total / static_cast<double>(count) : 0.0;
  };
  std::vector<std::size_t> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = i;
  result.plain_correlation = mean_correlation(identity);

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < chance_trials; ++t) {
    const double c = mean_correlation(gen_key(derive_seed(seed, t), n).perm);
    sum += c;
    sum_sq += c * c;
  }
  if (chance_trials > 0) {
    const double trials = static_cast<double>(chance_trials);
    result.chance_mean = sum / trials;
    result.chance_std = std::sqrt(std::max(0.0, sum_sq / trials - result.chance_mean * result.chance_mean));
  }
  return result;
}

std::array<std::vector<double>, 4> mi_collision(std::span<const double> mixed, std::uint64_t seed,
                                                double amplitude) {
  SplitMix64 rng(seed);
  std::array<std::vector<double>, 4> out;
  for (auto& s : out) s.resize(mixed.size());
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    double d[3];
    for (double& x : d) x = amplitude * (2.0 * rng.uniform() - 1.0);
    out[0][k] = mixed[k] + d[0];
    out[1][k] = mixed[k] + d[1];
    out[2][k] = mixed[k] + d[2];
    out[3][k] = mixed[k] - d[0] - d[1] - d[2];
  }
  return out;
}

}  // namespace picrypt::attacks
