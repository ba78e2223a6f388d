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

#include <iomanip>
#include <map>
#include <ostream>

#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/prng.h"

namespace picrypt::harness {

attacks::PuzzleMetrics run_puzzle_trial(const Image& source, const Sampling& sampling,
                                        std::size_t grid_side, std::uint64_t seed) {
  Image img = source;
  if (grid_side > 0) {
    const std::size_t extent =
        grid_side * sampling.patch_size + (grid_side - 1) * sampling.interval;
    img = crop(source, extent, extent);
  }
  PatchGrid grid = split_patches(img, sampling.patch_size, sampling.interval);
  grid = drop_patches(grid, sampling.drop_ratio, derive_seed(seed, 1));
  const PermutationKey key = gen_key(seed, grid.size());
  const PatchGrid shuffled = rs_encrypt(grid, key);
  const auto found =
      attacks::jigsaw_solve(shuffled.patches, grid.rows, grid.cols, grid.patch_size, grid.channels);
  const auto truth = attacks::truth_arrangement(shuffled.patches, key, grid.rows, grid.cols);
  return attacks::puzzle_metrics(found, truth);
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  if (spec.corpus == 0) throw ConfigError("sweep: corpus must hold at least one image");
  std::map<std::pair<std::size_t, std::size_t>, Classifier> models;
  std::map<std::size_t, Dataset> datasets;
  if (spec.model) {
    for (std::size_t size : spec.image_sizes) {
      SynthSpec data_spec = spec.data;
      data_spec.image_size = size;
      datasets.emplace(size, gen_dataset(data_spec));
      for (std::size_t p : spec.patch_sizes) {
        TrainConfig cfg = *spec.model;
        cfg.patch_size = p;
        cfg.target_accuracy = 0.0;
        models.emplace(std::make_pair(p, size), train(cfg, datasets.at(size).train).model);
      }
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t size : spec.image_sizes) {
    std::vector<Image> corpus;
    for (std::size_t i = 0; i < spec.corpus; ++i) {
      corpus.push_back(gen_puzzle_image(size, size, derive_seed(spec.seed, i)));
    }
    for (std::size_t p : spec.patch_sizes) {
      for (std::size_t k : spec.intervals) {
        for (double d : spec.drop_ratios) {
          SweepRow row{p, k, d, size, 0.0, 0.0, std::nullopt};
          const Sampling sampling{p, k, d};
          for (std::size_t i = 0; i < corpus.size(); ++i) {
            const auto m = run_puzzle_trial(corpus[i], sampling, 0, derive_seed(spec.seed, 1000 + i));
            row.direct += m.direct;
            row.neighbor += m.neighbor;
          }
          row.direct /= static_cast<double>(corpus.size());
          row.neighbor /= static_cast<double>(corpus.size());
          if (spec.model) {
            const Classifier& model = models.at({p, size});
            row.model_accuracy = evaluate(model, datasets.at(size).test, spec.model->enc,
                                          {sampling, derive_seed(spec.seed, 0xACC)});
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << kSweepCsvHeader << "\n";
  for (const auto& r : rows) {
    out << r.patch_size << "," << r.interval << "," << std::setprecision(4) << r.drop_ratio << ","
        << r.image_size << "," << std::fixed << std::setprecision(6) << r.direct << ","
        << r.neighbor << ",";
    if (r.model_accuracy) out << *r.model_accuracy;
    out << std::defaultfloat << "\n";
  }
}

}  // namespace picrypt::harness
