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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>

#include "picrypt/errors.h"
#include "picrypt/prng.h"

namespace picrypt::tensor {

namespace {

using detail::Node;

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> new_node(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

// Creates an op result; the graph edge is recorded only when some input
// needs a gradient and recording is enabled.
Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  auto node = new_node(std::move(shape), std::move(data), needs);
  if (needs) {
    for (const auto& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(node));
}

Tensor make_result_n(Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                     std::function<void(Node&)> backward_fn) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  auto node = new_node(std::move(shape), std::move(data), needs);
  if (needs) {
    for (const auto& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

void require_matrix(const Tensor& t, const char* op) {
  require_defined(t, op);
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " +
                     shape_string(t.shape()));
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

// Rows and columns of a tensor viewed as a matrix over its last axis.
std::pair<std::size_t, std::size_t> as_rows(const Tensor& t) {
  if (t.rank() == 0) return {1, 1};
  const std::size_t cols = t.shape().back();
  return {cols == 0 ? 0 : t.numel() / cols, cols};
}

bool needs_grad(const std::shared_ptr<Node>& n) { return n->requires_grad; }

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x k] += a[m x n] * b[k x n]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bp[j];
      c[i * k + p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << "]";
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::numel() const { return defined() ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  require_defined(*this, "data");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  require_defined(*this, "mutable_data");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const auto [rows, cols] = as_rows(*this);
  if (row >= rows || col >= cols) throw ShapeError("at: index out of range");
  return node_->data[row * cols + col];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

std::span<const double> Tensor::grad() const {
  require_defined(*this, "grad");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (defined()) node_->grad.clear();
}

Tensor Tensor::clone() const {
  require_defined(*this, "clone");
  return Tensor(new_node(node_->shape, node_->data, node_->requires_grad));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// --- primitives ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " are incompatible");
  }
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (needs_grad(pa)) gemm_nt(self.grad.data(), pb->data.data(), pa->ensure_grad().data(), m, n, k);
    if (needs_grad(pb)) gemm_tn(pa->data.data(), self.grad.data(), pb->ensure_grad().data(), m, k, n);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (const auto& p : self.parents) {
      if (!needs_grad(p)) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (needs_grad(self.parents[0])) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (needs_grad(self.parents[1])) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (needs_grad(pa)) {
      auto& g = pa->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->data[i];
    }
    if (needs_grad(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->data[i];
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_defined(a, "add_row");
  require_defined(row, "add_row");
  const auto [m, n] = as_rows(a);
  if (row.numel() != n || (row.rank() == 2 && row.dim(0) != 1) || row.rank() > 2) {
    throw ShapeError("add_row: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(row.shape()) + " are incompatible");
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto r = row.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += r[j];
  }
  return make_result(a.shape(), std::move(out), {a, row}, [m, n](Node& self) {
    if (needs_grad(self.parents[0])) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (needs_grad(self.parents[1])) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor concat_last_axis(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_last_axis: no inputs");
  for (const auto& p : parts) require_matrix(p, "concat_last_axis");
  const std::size_t m = parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != m) {
      throw ShapeError("concat_last_axis: shapes " + shape_string(parts[0].shape()) + " and " +
                       shape_string(p.shape()) + " differ in rows");
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto d = parts[k].data();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(i * widths[k]), widths[k],
                  out.begin() + static_cast<std::ptrdiff_t>(i * total + offset));
    }
    offset += widths[k];
  }
  return make_result_n({m, total}, std::move(out), parts, [m, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (needs_grad(self.parents[k])) {
        auto& g = self.parents[k]->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < widths[k]; ++j) {
            g[i * widths[k] + j] += self.grad[i * total + offset + j];
          }
        }
      }
      offset += widths[k];
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  std::size_t n = 0;
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    require_defined(p, "concat_rows");
    const auto [m, cols] = as_rows(p);
    if (p.rank() > 2 || (rows > 0 && cols != n)) {
      throw ShapeError("concat_rows: shapes " + shape_string(parts[0].shape()) + " and " +
                       shape_string(p.shape()) + " differ in columns");
    }
    n = cols;
    rows += m;
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_result_n({rows, n}, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (const auto& p : self.parents) {
      const std::size_t len = p->data.size();
      if (needs_grad(p)) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[offset + i];
      }
      offset += len;
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  if (begin > end || end > a.dim(0)) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside shape " + shape_string(a.shape()));
  }
  const std::size_t n = a.dim(1);
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * n));
  return make_result({end - begin, n}, std::move(out), {a}, [begin, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
  });
}

Tensor transpose_last_two(const Tensor& a) {
  require_matrix(a, "transpose_last_two");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const auto d = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = d[i * n + j];
  }
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor mean_last_axis(const Tensor& a) {
  require_defined(a, "mean_last_axis");
  if (a.rank() == 0 || a.rank() > 2) {
    throw ShapeError("mean_last_axis: unsupported shape " + shape_string(a.shape()));
  }
  const auto [m, n] = as_rows(a);
  if (n == 0) throw ShapeError("mean_last_axis: empty last axis");
  std::vector<double> out(m, 0.0);
  const auto d = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += d[i * n + j];
    out[i] = s / static_cast<double>(n);
  }
  return make_result({m}, std::move(out), {a}, [m, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double gi = self.grad[i] / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += gi;
    }
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({1}, {s}, {a}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor softmax_rows(const Tensor& x) {
  require_defined(x, "softmax_rows");
  const auto [m, n] = as_rows(x);
  std::vector<double> out(x.numel());
  const auto d = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = d.data() + i * n;
    double* o = out.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      o[j] = std::exp(row[j] - mx);
      s += o[j];
    }
    for (std::size_t j = 0; j < n; ++j) o[j] /= s;
  }
  return make_result(x.shape(), std::move(out), {x}, [m, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.data.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_defined(x, "layer_norm");
  const auto [m, n] = as_rows(x);
  if (gamma.numel() != n || beta.numel() != n) {
    throw ShapeError("layer_norm: input " + shape_string(x.shape()) + " with gamma " +
                     shape_string(gamma.shape()) + " and beta " + shape_string(beta.shape()));
  }
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(m);
  std::vector<double> out(x.numel());
  const auto d = x.data();
  const auto gm = gamma.data();
  const auto bt = beta.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = d.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    const double r = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * r;
      (*xhat)[i * n + j] = h;
      out[i * n + j] = h * gm[j] + bt[j];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta}, [m, n, xhat, rstd](Node& self) {
    const auto& px = self.parents[0];
    const auto& pg = self.parents[1];
    const auto& pb = self.parents[2];
    if (needs_grad(pg)) {
      auto& g = pg->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j] * (*xhat)[i * n + j];
      }
    }
    if (needs_grad(pb)) {
      auto& g = pb->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    }
    if (needs_grad(px)) {
      auto& g = px->ensure_grad();
      const auto& gm = pg->data;
      for (std::size_t i = 0; i < m; ++i) {
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double dh = self.grad[i * n + j] * gm[j];
          mean_dh += dh;
          mean_dh_h += dh * (*xhat)[i * n + j];
        }
        mean_dh /= static_cast<double>(n);
        mean_dh_h /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          const double dh = self.grad[i * n + j] * gm[j];
          g[i * n + j] += (*rstd)[i] * (dh - mean_dh - (*xhat)[i * n + j] * mean_dh_h);
        }
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  require_defined(x, "gelu");
  std::vector<double> out(x.numel());
  const auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = d[i];
    const double t = std::tanh(kGeluSqrt2OverPi * (v + kGeluCubic * v * v * v));
    out[i] = 0.5 * v * (1.0 + t);
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    const auto& px = self.parents[0];
    auto& g = px->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = px->data[i];
      const double t = std::tanh(kGeluSqrt2OverPi * (v + kGeluCubic * v * v * v));
      const double du = kGeluSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
      g[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  require_defined(x, "sigmoid");
  std::vector<double> out(x.numel());
  const auto d = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = d[i];
    if (v >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.data[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  require_defined(logits, "cross_entropy");
  const auto [m, n] = as_rows(logits);
  if (m != 1) {
    throw ShapeError("cross_entropy: expected one row of logits, got " +
                     shape_string(logits.shape()));
  }
  if (label >= n) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " outside " +
                     std::to_string(n) + " classes");
  }
  const auto d = logits.data();
  const double mx = *std::max_element(d.begin(), d.end());
  double s = 0.0;
  for (double v : d) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  return make_result({1}, {lse - d[label]}, {logits}, [label, mx, s](Node& self) {
    const auto& p = self.parents[0];
    auto& g = p->ensure_grad();
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double prob = std::exp(p->data[j] - mx) / s;
      g[j] += self.grad[0] * (prob - (j == label ? 1.0 : 0.0));
    }
  });
}

void backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  std::vector<Node*> order;
  std::set<const Node*> seen;
  std::vector<Node*> stack{loss.node()};
  seen.insert(loss.node());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->id > b->id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->id == order[i - 1]->id) throw InternalError("backward: duplicate node id");
  }

  loss.node()->ensure_grad()[0] += 1.0;
  for (Node* n : order) {
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           std::span<const NamedTensor> params, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ConfigError("grad_check: step must be positive");
  for (const auto& p : params) {
    auto t = p.tensor;
    t.zero_grad();
  }
  {
    const Tensor loss = loss_fn();
    backward(loss);
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor.numel();
  if (options.samples == 0 || options.samples >= total) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < params[k].tensor.numel(); ++i) coords.emplace_back(k, i);
    }
  } else {
    SplitMix64 rng(options.seed);
    std::set<std::size_t> picked;
    while (picked.size() < options.samples) picked.insert(rng.below(total));
    for (std::size_t flat : picked) {
      std::size_t k = 0;
      while (flat >= params[k].tensor.numel()) flat -= params[k++].tensor.numel();
      coords.emplace_back(k, flat);
    }
  }

  GradCheckReport report;
  NoGradGuard no_grad;
  for (const auto& [k, i] : coords) {
    Tensor t = params[k].tensor;
    const auto g = t.grad();
    const double analytic = g.empty() ? 0.0 : g[i];
    auto data = t.mutable_data();
    const double saved = data[i];
    data[i] = saved + options.step;
    const double plus = loss_fn().item();
    data[i] = saved - options.step;
    const double minus = loss_fn().item();
    data[i] = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_param = params[k].name;
      report.worst_index = i;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
    ++report.checked;
  }
  return report;
}

}  // namespace picrypt::tensor
