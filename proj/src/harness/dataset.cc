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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "picrypt/errors.h"
#include "picrypt/harness.h"
#include "picrypt/prng.h"

namespace picrypt::harness {

namespace {

// Everything except the leakage marker stays at or below this value so the
// marker template never matches natural content.
constexpr int kMaxContent = 250;

constexpr std::array<std::array<int, 3>, kMaxSynthClasses> kPalette = {{
    {220, 40, 40},
    {40, 200, 40},
    {40, 80, 230},
    {230, 210, 40},
    {200, 40, 200},
    {40, 210, 210},
    {240, 140, 30},
    {140, 80, 30},
    {170, 170, 170},
    {120, 40, 200},
}};

// Shape membership in normalized coordinates, |dx|, |dy| <= 1 spans the shape.
bool inside_shape(std::size_t shape, double dx, double dy) {
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (shape) {
    case 0: return ax <= 1 && ay <= 1;
    case 1: return dx * dx + dy * dy <= 1;
    case 2: return dy >= -1 && dy <= 1 && ax <= (dy + 1) / 2;
    case 3: return (ax <= 0.3 && ay <= 1) || (ay <= 0.3 && ax <= 1);
    case 4: {
      const double r = std::sqrt(dx * dx + dy * dy);
      return r >= 0.55 && r <= 1;
    }
    case 5: {
      const double m = std::max(ax, ay);
      return m >= 0.6 && m <= 1;
    }
    case 6: return ay <= 0.35 && ax <= 1;
    case 7: return ax <= 0.35 && ay <= 1;
    case 8: return ax + ay <= 1;
    case 9: return std::max(ax, ay) <= 1 && (std::abs(dx - dy) <= 0.3 || std::abs(dx + dy) <= 0.3);
    default: return false;
  }
}

std::uint8_t clamp_byte(double v, int hi = 255) {
  return static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(v)), 0, hi));
}

Image render_sample(const SynthSpec& spec, std::size_t label, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t size = spec.image_size;
  Image img = Image::blank(size, size, 3);

  std::array<double, 3> background{};
  for (auto& b : background) b = 10.0 + 80.0 * rng.uniform();
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = clamp_byte(background[i % 3] + 24.0 * (rng.uniform() - 0.5), kMaxContent);
  }

  std::array<double, 3> colour{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    colour[ch] = kPalette[label][ch] + 50.0 * (rng.uniform() - 0.5);
  }
  const double sz = static_cast<double>(size);
  const double radius = sz * (0.16 + 0.16 * rng.uniform());
  const double cx = radius + (sz - 2 * radius) * rng.uniform();
  const double cy = radius + (sz - 2 * radius) * rng.uniform();
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / radius;
      const double dy = (static_cast<double>(y) + 0.5 - cy) / radius;
      if (!inside_shape(label, dx, dy)) continue;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        img.at(y, x, ch) = clamp_byte(colour[ch] + 10.0 * (rng.uniform() - 0.5), kMaxContent);
      }
    }
  }

  if (spec.marker_enabled) {
    const std::size_t span = size - kMarkerSize + 1;
    const auto my = static_cast<std::size_t>(rng.below(span));
    const auto mx = static_cast<std::size_t>(rng.below(span));
    for (std::size_t y = my; y < my + kMarkerSize; ++y) {
      for (std::size_t x = mx; x < mx + kMarkerSize; ++x) {
        for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = 255;
      }
    }
  }
  return img;
}

}  // namespace

Dataset gen_dataset(const SynthSpec& spec) {
  if (spec.classes < 2 || spec.classes > kMaxSynthClasses) {
    throw ConfigError("data: classes must lie in [2, " + std::to_string(kMaxSynthClasses) + "]");
  }
  if (spec.image_size < 2 * kMarkerSize) {
    throw ConfigError("data: image size must be at least " + std::to_string(2 * kMarkerSize));
  }
  Dataset data;
  const std::size_t n_train = spec.train_per_class * spec.classes;
  const std::size_t n_test = spec.test_per_class * spec.classes;
  data.train.reserve(n_train);
  data.test.reserve(n_test);
  const std::uint64_t train_stream = derive_seed(spec.seed, 0x7452);
  const std::uint64_t test_stream = derive_seed(spec.seed, 0x7453);
  for (std::size_t i = 0; i < n_train; ++i) {
    const std::size_t label = i % spec.classes;
    data.train.push_back({render_sample(spec, label, derive_seed(train_stream, i)), label});
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t label = i % spec.classes;
    data.test.push_back({render_sample(spec, label, derive_seed(test_stream, i)), label});
  }
  return data;
}

Image gen_puzzle_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image img = Image::blank(height, width, 3);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 3>, 3> waves{};
  std::array<double, 3> base{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    base[ch] = 60.0 + 120.0 * rng.uniform();
    for (auto& w : waves[ch]) {
      w.fx = (0.5 + 3.0 * rng.uniform()) / static_cast<double>(width);
      w.fy = (0.5 + 3.0 * rng.uniform()) / static_cast<double>(height);
      w.phase = 2.0 * std::numbers::pi * rng.uniform();
      w.amp = 15.0 + 30.0 * rng.uniform();
    }
  }
  struct Blob {
    double cx, cy, rx, ry;
    std::array<double, 3> colour;
  };
  std::vector<Blob> blobs(4);
  for (auto& b : blobs) {
    b.cx = static_cast<double>(width) * rng.uniform();
    b.cy = static_cast<double>(height) * rng.uniform();
    b.rx = static_cast<double>(width) * (0.05 + 0.15 * rng.uniform());
    b.ry = static_cast<double>(height) * (0.05 + 0.15 * rng.uniform());
    for (auto& c : b.colour) c = 255.0 * rng.uniform();
  }
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      std::array<double, 3> v = base;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        for (const auto& w : waves[ch]) {
          v[ch] += w.amp * std::sin(2.0 * std::numbers::pi *
                                        (w.fx * static_cast<double>(x) + w.fy * static_cast<double>(y)) +
                                    w.phase);
        }
      }
      for (const auto& b : blobs) {
        const double dx = (static_cast<double>(x) - b.cx) / b.rx;
        const double dy = (static_cast<double>(y) - b.cy) / b.ry;
        if (dx * dx + dy * dy <= 1.0) v = b.colour;
      }
      for (std::size_t ch = 0; ch < 3; ++ch) {
        img.at(y, x, ch) = clamp_byte(v[ch] + 8.0 * (rng.uniform() - 0.5));
      }
    }
  }
  return img;
}

Image crop(const Image& img, std::size_t height, std::size_t width) {
  if (height > img.height || width > img.width) {
    throw GeometryError("crop: " + std::to_string(height) + "x" + std::to_string(width) +
                        " exceeds " + std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  Image out = Image::blank(height, width, img.channels);
  for (std::size_t y = 0; y < height; ++y) {
    std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width * img.channels),
                width * img.channels,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y * width * img.channels));
  }
  return out;
}

double nearest_neighbor_accuracy(std::span<const LabeledImage> train,
                                 std::span<const LabeledImage> test) {
  if (train.empty() || test.empty()) throw ConfigError("1-nn: empty data");
  std::size_t correct = 0;
  for (const auto& q : test) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_label = 0;
    for (const auto& t : train) {
      if (t.image.pixels.size() != q.image.pixels.size()) {
        throw GeometryError("1-nn: image sizes differ");
      }
      double d = 0.0;
      for (std::size_t i = 0; i < q.image.pixels.size(); ++i) {
        const double diff = static_cast<double>(q.image.pixels[i]) - t.image.pixels[i];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_label = t.label;
      }
    }
    correct += best_label == q.label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace picrypt::harness
