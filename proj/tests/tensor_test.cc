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

#include "picrypt/tensor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "picrypt/checkpoint.h"
#include "picrypt/errors.h"
#include "test_util.h"

namespace picrypt::tensor {
namespace {

using testing::random_tensor;

// Projects an output onto a fixed random direction so every output entry
// contributes to the checked gradient.
Tensor probe(const Tensor& y, std::uint64_t seed) {
  return sum(mul(y, random_tensor(y.shape(), seed)));
}

double check(const std::function<Tensor()>& loss, std::vector<NamedTensor> params,
             std::size_t samples = 0) {
  GradCheckOptions options;
  options.samples = samples;
  return grad_check(loss, params, options).max_relative_error;
}

TEST(Primitives, SoftmaxOfEqualLogits) {
  const Tensor y = softmax_rows(Tensor::from({1, 2}, {0.0, 0.0}));
  EXPECT_EQ(y.at(0, 0), 0.5);
  EXPECT_EQ(y.at(0, 1), 0.5);
}

TEST(Primitives, SoftmaxRowsSumToOneAndIgnoreShifts) {
  const Tensor x = random_tensor({5, 7}, 1, 3.0);
  const Tensor y = softmax_rows(x);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 7; ++c) s += y.at(r, c);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  std::vector<double> shifted(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 1000.0 * (i / 7);
  EXPECT_LT(testing::max_abs_diff(softmax_rows(Tensor::from({5, 7}, shifted)), y), 1e-12);
  const Tensor huge = softmax_rows(Tensor::from({1, 2}, {1e300, 0.0}));
  EXPECT_EQ(huge.at(0, 0), 1.0);
}

TEST(Primitives, LayerNormOfConstantRow) {
  const Tensor y = layer_norm(Tensor::full({1, 6}, 3.25), Tensor::full({6}, 1.0),
                              Tensor::zeros({6}));
  for (double v : y.data()) EXPECT_LT(std::abs(v), 1e-6);
}

TEST(Primitives, GeluAndSigmoidReferenceValues) {
  const Tensor x = Tensor::from({1, 3}, {-1.0, 0.0, 2.0});
  const Tensor g = gelu(x);
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = x.data()[i];
    const double ref =
        0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
    EXPECT_DOUBLE_EQ(g.data()[i], ref);
  }
  const Tensor s = sigmoid(Tensor::from({3}, {-800.0, 0.0, 800.0}));
  EXPECT_EQ(s.data()[0], 0.0);
  EXPECT_EQ(s.data()[1], 0.5);
  EXPECT_EQ(s.data()[2], 1.0);
}

TEST(Primitives, CrossEntropyMatchesLogSumExp) {
  const Tensor z = Tensor::from({1, 3}, {1.0, 2.0, 0.5});
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
  EXPECT_NEAR(cross_entropy(z, 1).item(), lse - 2.0, 1e-14);
  EXPECT_THROW(cross_entropy(z, 3), ShapeError);
}

TEST(Primitives, ShapeErrorsNameBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4x2"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
  EXPECT_THROW(add_row(Tensor::zeros({2, 3}), Tensor::zeros({2})), ShapeError);
}

TEST(Primitives, RowwiseOpsAreRowPermutationEquivariant) {
  const Tensor x = random_tensor({6, 5}, 4);
  const Tensor gamma = random_tensor({5}, 5);
  const Tensor beta = random_tensor({5}, 6);
  const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  std::vector<Tensor> rows;
  for (std::size_t p : perm) rows.push_back(slice_rows(x, p, p + 1));
  const Tensor px = concat_rows(rows);
  const std::vector<std::function<Tensor(const Tensor&)>> ops = {
      [](const Tensor& t) { return softmax_rows(t); },
      [&](const Tensor& t) { return layer_norm(t, gamma, beta); },
      [](const Tensor& t) { return gelu(t); },
      [](const Tensor& t) { return sigmoid(t); }};
  for (const auto& op : ops) {
    const Tensor y = op(x);
    const Tensor py = op(px);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(py.at(i, c), y.at(perm[i], c));
    }
  }
}

TEST(Backward, SumGivesOnes) {
  const Tensor x = random_tensor({3, 4}, 9, 1.0, true);
  backward(sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, DotGivesTwiceInput) {
  const Tensor x = random_tensor({1, 5}, 10, 1.0, true);
  backward(matmul(x, transpose_last_two(x)));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x.data()[i]);
}

TEST(Backward, SharedSubexpressionsAccumulate) {
  const Tensor x = Tensor::from({1}, {3.0}, true);
  const Tensor y = mul(x, x);
  backward(sum(add(y, y)));  // 2x^2
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Backward, NoGradGuardStopsRecording) {
  const Tensor x = random_tensor({2, 2}, 3, 1.0, true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    EXPECT_FALSE(sum(x).requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_TRUE(sum(x).requires_grad());
}

TEST(GradCheck, QuadraticIsNearlyExact) {
  const Tensor x = random_tensor({4, 3}, 20, 1.0, true);
  EXPECT_LT(check([&] { return sum(mul(x, x)); }, {{"x", x}}), 1e-9);
}

TEST(GradCheck, GeluChain) {
  const Tensor x = random_tensor({3, 4}, 21, 1.0, true);
  const Tensor w = random_tensor({4, 4}, 22, 0.5, true);
  EXPECT_LT(check([&] { return probe(gelu(matmul(gelu(x), w)), 23); }, {{"x", x}, {"w", w}}),
            1e-6);
}

TEST(GradCheck, EveryPrimitiveMatchesFiniteDifferences) {
  const Tensor a = random_tensor({3, 4}, 30, 1.0, true);
  const Tensor b = random_tensor({3, 4}, 31, 1.0, true);
  const Tensor w = random_tensor({4, 2}, 32, 1.0, true);
  const Tensor row = random_tensor({4}, 33, 1.0, true);
  const Tensor gamma = random_tensor({4}, 34, 1.0, true);
  const std::vector<NamedTensor> ab = {{"a", a}, {"b", b}};
  const std::vector<std::pair<std::string, std::function<Tensor()>>> cases = {
      {"matmul", [&] { return probe(matmul(a, w), 1); }},
      {"add", [&] { return probe(add(a, b), 2); }},
      {"sub", [&] { return probe(sub(a, b), 3); }},
      {"mul", [&] { return probe(mul(a, b), 4); }},
      {"add_row", [&] { return probe(add_row(a, row), 5); }},
      {"scale", [&] { return probe(scale(a, -1.7), 6); }},
      {"concat_last_axis",
       [&] {
         const Tensor parts[] = {a, b};
         return probe(concat_last_axis(parts), 7);
       }},
      {"concat_rows",
       [&] {
         const Tensor parts[] = {a, b};
         return probe(concat_rows(parts), 8);
       }},
      {"slice_rows", [&] { return probe(slice_rows(a, 1, 3), 9); }},
      {"transpose", [&] { return probe(transpose_last_two(a), 10); }},
      {"mean_last_axis", [&] { return probe(mean_last_axis(a), 11); }},
      {"softmax", [&] { return probe(softmax_rows(a), 12); }},
      {"layer_norm", [&] { return probe(layer_norm(a, gamma, row), 13); }},
      {"gelu", [&] { return probe(gelu(a), 14); }},
      {"sigmoid", [&] { return probe(sigmoid(a), 15); }},
      {"cross_entropy", [&] { return cross_entropy(slice_rows(a, 0, 1), 2); }},
  };
  const std::vector<NamedTensor> all = {
      {"a", a}, {"b", b}, {"w", w}, {"row", row}, {"gamma", gamma}};
  for (const auto& [name, fn] : cases) {
    EXPECT_LT(check(fn, all), 1e-6) << name;
  }
}

TEST(GradCheck, SamplingReportsCount) {
  const Tensor x = random_tensor({10, 10}, 40, 1.0, true);
  GradCheckOptions options;
  options.samples = 17;
  const auto report = grad_check([&] { return sum(gelu(x)); }, std::vector<NamedTensor>{{"x", x}},
                                 options);
  EXPECT_EQ(report.checked, 17u);
  EXPECT_LT(report.max_relative_error, 1e-6);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A loss whose recorded graph ignores one term: analytic gradient is wrong.
  const Tensor x = random_tensor({1, 3}, 41, 1.0, true);
  auto loss = [&] {
    double extra = 0.0;
    for (double v : x.data()) extra += v * v;
    return add(sum(x), Tensor::from({1}, {extra}));
  };
  EXPECT_GT(check(loss, {{"x", x}}), 1e-2);
}

TEST(Checkpoint, RoundtripAndLayout) {
  const std::vector<NamedTensor> entries = {{"w", random_tensor({2, 3}, 1)},
                                            {"layer0.b", random_tensor({4}, 2)}};
  const auto bytes = encode_checkpoint(entries);
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PETN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);
  // header 12 + ("w": 2+1+4+16+48) + ("layer0.b": 2+8+4+8+32)
  EXPECT_EQ(bytes.size(), 12u + 71u + 54u);
  const auto back = decode_checkpoint(bytes);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].tensor.shape(), entries[i].tensor.shape());
    EXPECT_EQ(testing::max_abs_diff(back[i].tensor, entries[i].tensor), 0.0);
  }
  const auto path = testing::scratch_dir("tensor") / "c.petn";
  save_checkpoint(entries, path);
  EXPECT_EQ(encode_checkpoint(load_checkpoint(path)), bytes);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::vector<NamedTensor> entries = {{"w", random_tensor({2, 2}, 1)}};
  auto bytes = encode_checkpoint(entries);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_checkpoint(truncated), DecodeError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), DecodeError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), DecodeError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(decode_checkpoint(version), DecodeError);
  const std::vector<NamedTensor> dup = {{"w", entries[0].tensor}, {"w", entries[0].tensor}};
  EXPECT_THROW(decode_checkpoint(encode_checkpoint(dup)), DecodeError);
}

}  // namespace
}  // namespace picrypt::tensor
