// Copyright 2026 The stanfc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stan/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stan/common/error.hpp"
#include "stan/simd/kernels.hpp"

namespace stan::ad {
namespace {

[[noreturn]] void dim_error(Kernel k, const std::string& detail) {
  throw DimensionError(std::string(kernel_name(k)) + ": " + detail);
}

void require_matrix(Kernel k, const Tensor& t) {
  if (t.rank() > 2) dim_error(k, "expected rank <= 2, got " + t.shape_string());
}

void require_same_shape(Kernel k, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    dim_error(k, "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

void accumulate(std::vector<Tensor>& grads, NodeId id, const Tensor& like) {
  if (grads[id].empty()) grads[id] = Tensor::zeros_like(like);
}

}  // namespace

std::string_view kernel_name(Kernel k) noexcept {
  switch (k) {
    case Kernel::leaf: return "leaf";
    case Kernel::matmul: return "matmul";
    case Kernel::add: return "add";
    case Kernel::add_row: return "add_row";
    case Kernel::sub: return "sub";
    case Kernel::mul: return "mul";
    case Kernel::affine: return "affine";
    case Kernel::concat_cols: return "concat_cols";
    case Kernel::concat_rows: return "concat_rows";
    case Kernel::slice_cols: return "slice_cols";
    case Kernel::slice_rows: return "slice_rows";
    case Kernel::leaky_relu: return "leaky_relu";
    case Kernel::sigmoid: return "sigmoid";
    case Kernel::tanh: return "tanh";
    case Kernel::masked_softmax: return "masked_softmax";
    case Kernel::column_max: return "column_max";
    case Kernel::sum_squares: return "sum_squares";
    case Kernel::sum: return "sum";
    case Kernel::outer_sum: return "outer_sum";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->value(*this); }

const Tensor& GradientMap::at(ParamId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw ContractError("gradient: unknown parameter id " + std::to_string(id));
  return it->second;
}

Var Tape::push(Node node) {
  if (nodes_.size() >= static_cast<std::size_t>(UINT32_MAX)) throw ContractError("tape: node limit");
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

void Tape::check_owner(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("tape: variable does not belong to this tape");
  }
}

const Tape::Node& Tape::node(Var v) const {
  check_owner(v);
  return nodes_[v.id()];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(ParamId id, Tensor value) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  n.param = id;
  return push(std::move(n));
}

Tensor Tape::evaluate(Node& n, const Tensor* x, const Tensor* y) {
  const auto& kt = simd::kernels();
  const Kernel k = n.kernel;
  switch (k) {
    case Kernel::leaf:
      return n.value;
    case Kernel::matmul: {
      require_matrix(k, *x);
      require_matrix(k, *y);
      const std::size_t m = x->rows(), inner = x->cols(), cols = y->cols();
      if (y->rows() != inner) {
        dim_error(k, "inner extents differ: " + x->shape_string() + " * " + y->shape_string());
      }
      Tensor out({m, cols});
      simd::gemm(x->data(), y->data(), out.data(), m, inner, cols);
      return out;
    }
    case Kernel::add:
    case Kernel::sub:
    case Kernel::mul: {
      require_same_shape(k, *x, *y);
      Tensor out(x->shape());
      auto fn = k == Kernel::add ? kt.add : (k == Kernel::sub ? kt.sub : kt.mul);
      fn(x->data(), y->data(), out.data(), out.size());
      return out;
    }
    case Kernel::add_row: {
      require_matrix(k, *x);
      if (y->size() != x->cols() || y->rows() != 1) {
        dim_error(k, "row " + y->shape_string() + " does not broadcast over " + x->shape_string());
      }
      Tensor out(x->shape());
      const std::size_t c = x->cols();
      for (std::size_t r = 0; r < x->rows(); ++r) {
        kt.add(x->data() + r * c, y->data(), out.data() + r * c, c);
      }
      return out;
    }
    case Kernel::affine: {
      Tensor out(x->shape());
      kt.affine(n.a, n.b, x->data(), out.data(), out.size());
      return out;
    }
    case Kernel::concat_cols: {
      require_matrix(k, *x);
      require_matrix(k, *y);
      if (x->rows() != y->rows()) {
        dim_error(k, "row counts differ: " + x->shape_string() + " | " + y->shape_string());
      }
      const std::size_t r = x->rows(), ca = x->cols(), cb = y->cols();
      Tensor out({r, ca + cb});
      for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(x->data() + i * ca, ca, out.data() + i * (ca + cb));
        std::copy_n(y->data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
      }
      return out;
    }
    case Kernel::concat_rows: {
      require_matrix(k, *x);
      require_matrix(k, *y);
      if (x->cols() != y->cols()) {
        dim_error(k, "column counts differ: " + x->shape_string() + " ; " + y->shape_string());
      }
      std::vector<double> v(x->storage());
      v.insert(v.end(), y->storage().begin(), y->storage().end());
      return Tensor({x->rows() + y->rows(), x->cols()}, std::move(v));
    }
    case Kernel::slice_cols: {
      require_matrix(k, *x);
      if (n.lo >= n.hi || n.hi > x->cols()) {
        dim_error(k, "column range [" + std::to_string(n.lo) + ", " + std::to_string(n.hi) +
                         ") outside " + x->shape_string());
      }
      const std::size_t r = x->rows(), c = x->cols(), w = n.hi - n.lo;
      Tensor out({r, w});
      for (std::size_t i = 0; i < r; ++i) std::copy_n(x->data() + i * c + n.lo, w, out.data() + i * w);
      return out;
    }
    case Kernel::slice_rows: {
      require_matrix(k, *x);
      if (n.lo >= n.hi || n.hi > x->rows()) {
        dim_error(k, "row range [" + std::to_string(n.lo) + ", " + std::to_string(n.hi) +
                         ") outside " + x->shape_string());
      }
      const std::size_t c = x->cols();
      std::vector<double> v(x->data() + n.lo * c, x->data() + n.hi * c);
      return Tensor({n.hi - n.lo, c}, std::move(v));
    }
    case Kernel::leaky_relu: {
      Tensor out(x->shape());
      kt.leaky_relu(x->data(), out.data(), out.size(), kLeakySlope);
      return out;
    }
    case Kernel::sigmoid: {
      Tensor out(x->shape());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = (*x)[i];
        // Branch keeps exp() from overflowing for large |v|.
        if (v >= 0.0) {
          out[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
          const double e = std::exp(v);
          out[i] = e / (1.0 + e);
        }
      }
      return out;
    }
    case Kernel::tanh: {
      Tensor out(x->shape());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh((*x)[i]);
      return out;
    }
    case Kernel::masked_softmax: {
      require_matrix(k, *x);
      const auto& mask = *n.mask;
      if (mask.size() != x->size()) {
        dim_error(k, "mask has " + std::to_string(mask.size()) + " entries for logits " +
                         x->shape_string());
      }
      const std::size_t r = x->rows(), c = x->cols();
      Tensor out(x->shape());
      std::vector<double> terms;
      terms.reserve(c);
      for (std::size_t i = 0; i < r; ++i) {
        const double* row = x->data() + i * c;
        const std::uint8_t* m = mask.data() + i * c;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < c; ++j) {
          if (m[j]) mx = std::max(mx, row[j]);
        }
        if (mx == -INFINITY) {
          throw ContractError("masked_softmax: row " + std::to_string(i) + " has no unmasked entry");
        }
        double* o = out.data() + i * c;
        terms.clear();
        for (std::size_t j = 0; j < c; ++j) {
          o[j] = m[j] ? std::exp(row[j] - mx) : 0.0;
          if (m[j]) terms.push_back(o[j]);
        }
        // Summed in sorted order so a relabelling of the columns cannot
        // change the denominator.
        std::sort(terms.begin(), terms.end());
        double denom = 0.0;
        for (double v : terms) denom += v;
        for (std::size_t j = 0; j < c; ++j) o[j] /= denom;
      }
      return out;
    }
    case Kernel::column_max: {
      require_matrix(k, *x);
      const std::size_t r = x->rows(), c = x->cols();
      Tensor out({1, c});
      n.argmax.assign(c, 0);
      for (std::size_t j = 0; j < c; ++j) {
        double best = (*x)(0, j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < r; ++i) {
          if ((*x)(i, j) > best) {
            best = (*x)(i, j);
            arg = i;
          }
        }
        out[j] = best;
        n.argmax[j] = arg;
      }
      return out;
    }
    case Kernel::sum_squares:
      return Tensor::scalar(kt.sum_squares(x->data(), x->size()));
    case Kernel::sum:
      return Tensor::scalar(kt.sum(x->data(), x->size()));
    case Kernel::outer_sum: {
      const std::size_t r = x->size(), c = y->size();
      Tensor out({r, c});
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out(i, j) = (*x)[i] + (*y)[j];
      }
      return out;
    }
  }
  throw ContractError("tape: unknown kernel");
}

#define STAN_TAPE_OP1(NAME, KERNEL)          \
  Var Tape::NAME(Var x) {                    \
    check_owner(x);                          \
    Node n;                                  \
    n.kernel = KERNEL;                       \
    n.arity = 1;                             \
    n.in[0] = x.id();                        \
    n.needs_grad = nodes_[x.id()].needs_grad; \
    n.value = evaluate(n, &nodes_[x.id()].value, nullptr); \
    return push(std::move(n));               \
  }

#define STAN_TAPE_OP2(NAME, KERNEL)                                               \
  Var Tape::NAME(Var x, Var y) {                                                  \
    check_owner(x);                                                               \
    check_owner(y);                                                               \
    Node n;                                                                       \
    n.kernel = KERNEL;                                                            \
    n.arity = 2;                                                                  \
    n.in[0] = x.id();                                                             \
    n.in[1] = y.id();                                                             \
    n.needs_grad = nodes_[x.id()].needs_grad || nodes_[y.id()].needs_grad;        \
    n.value = evaluate(n, &nodes_[x.id()].value, &nodes_[y.id()].value);          \
    return push(std::move(n));                                                    \
  }

STAN_TAPE_OP2(matmul, Kernel::matmul)
STAN_TAPE_OP2(add, Kernel::add)
STAN_TAPE_OP2(add_row, Kernel::add_row)
STAN_TAPE_OP2(sub, Kernel::sub)
STAN_TAPE_OP2(mul, Kernel::mul)
STAN_TAPE_OP2(concat_cols, Kernel::concat_cols)
STAN_TAPE_OP2(concat_rows, Kernel::concat_rows)
STAN_TAPE_OP2(outer_sum, Kernel::outer_sum)
STAN_TAPE_OP1(leaky_relu, Kernel::leaky_relu)
STAN_TAPE_OP1(sigmoid, Kernel::sigmoid)
STAN_TAPE_OP1(tanh, Kernel::tanh)
STAN_TAPE_OP1(column_max, Kernel::column_max)
STAN_TAPE_OP1(sum_squares, Kernel::sum_squares)
STAN_TAPE_OP1(sum, Kernel::sum)

#undef STAN_TAPE_OP1
#undef STAN_TAPE_OP2

Var Tape::affine(Var x, double scale, double shift) {
  check_owner(x);
  Node n;
  n.kernel = Kernel::affine;
  n.arity = 1;
  n.in[0] = x.id();
  n.a = scale;
  n.b = shift;
  n.needs_grad = nodes_[x.id()].needs_grad;
  n.value = evaluate(n, &nodes_[x.id()].value, nullptr);
  return push(std::move(n));
}

Var Tape::slice_cols(Var x, std::size_t begin, std::size_t end) {
  check_owner(x);
  Node n;
  n.kernel = Kernel::slice_cols;
  n.arity = 1;
  n.in[0] = x.id();
  n.lo = begin;
  n.hi = end;
  n.needs_grad = nodes_[x.id()].needs_grad;
  n.value = evaluate(n, &nodes_[x.id()].value, nullptr);
  return push(std::move(n));
}

Var Tape::slice_rows(Var x, std::size_t begin, std::size_t end) {
  check_owner(x);
  Node n;
  n.kernel = Kernel::slice_rows;
  n.arity = 1;
  n.in[0] = x.id();
  n.lo = begin;
  n.hi = end;
  n.needs_grad = nodes_[x.id()].needs_grad;
  n.value = evaluate(n, &nodes_[x.id()].value, nullptr);
  return push(std::move(n));
}

Var Tape::masked_softmax(Var logits, std::shared_ptr<const std::vector<std::uint8_t>> mask) {
  check_owner(logits);
  if (!mask) throw ContractError("masked_softmax: null mask");
  Node n;
  n.kernel = Kernel::masked_softmax;
  n.arity = 1;
  n.in[0] = logits.id();
  n.mask = std::move(mask);
  n.needs_grad = nodes_[logits.id()].needs_grad;
  n.value = evaluate(n, &nodes_[logits.id()].value, nullptr);
  return push(std::move(n));
}

Var Tape::softmax(Var logits) {
  const std::size_t n = value(logits).size();
  return masked_softmax(logits, std::make_shared<const std::vector<std::uint8_t>>(n, 1));
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Var out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat_cols(out, parts[i]);
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Var out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat_rows(out, parts[i]);
  return out;
}

void Tape::propagate(const Node& n, const Tensor& g, std::vector<Tensor>& grads) const {
  const auto& kt = simd::kernels();
  const NodeId ia = n.in[0];
  const NodeId ib = n.in[1];
  const bool ga = n.arity >= 1 && nodes_[ia].needs_grad;
  const bool gb = n.arity >= 2 && nodes_[ib].needs_grad;
  const Tensor* x = n.arity >= 1 ? &nodes_[ia].value : nullptr;
  const Tensor* y = n.arity >= 2 ? &nodes_[ib].value : nullptr;
  auto grad_a = [&]() -> Tensor& {
    accumulate(grads, ia, *x);
    return grads[ia];
  };
  auto grad_b = [&]() -> Tensor& {
    accumulate(grads, ib, *y);
    return grads[ib];
  };

  switch (n.kernel) {
    case Kernel::leaf:
      return;
    case Kernel::matmul: {
      const std::size_t m = x->rows(), inner = x->cols(), cols = y->cols();
      if (ga) simd::gemm_acc_nt(g.data(), y->data(), grad_a().data(), m, cols, inner);
      if (gb) simd::gemm_acc_tn(x->data(), g.data(), grad_b().data(), m, inner, cols);
      return;
    }
    case Kernel::add:
      if (ga) kt.axpy(1.0, g.data(), grad_a().data(), g.size());
      if (gb) kt.axpy(1.0, g.data(), grad_b().data(), g.size());
      return;
    case Kernel::sub:
      if (ga) kt.axpy(1.0, g.data(), grad_a().data(), g.size());
      if (gb) kt.axpy(-1.0, g.data(), grad_b().data(), g.size());
      return;
    case Kernel::mul:
      if (ga) kt.mul_acc(g.data(), y->data(), grad_a().data(), g.size());
      if (gb) kt.mul_acc(g.data(), x->data(), grad_b().data(), g.size());
      return;
    case Kernel::add_row: {
      if (ga) kt.axpy(1.0, g.data(), grad_a().data(), g.size());
      if (gb) {
        Tensor& gr = grad_b();
        const std::size_t c = x->cols();
        for (std::size_t r = 0; r < x->rows(); ++r) kt.axpy(1.0, g.data() + r * c, gr.data(), c);
      }
      return;
    }
    case Kernel::affine:
      if (ga) kt.axpy(n.a, g.data(), grad_a().data(), g.size());
      return;
    case Kernel::concat_cols: {
      const std::size_t r = x->rows(), ca = x->cols(), cb = y->cols();
      for (std::size_t i = 0; i < r; ++i) {
        if (ga) kt.axpy(1.0, g.data() + i * (ca + cb), grad_a().data() + i * ca, ca);
        if (gb) kt.axpy(1.0, g.data() + i * (ca + cb) + ca, grad_b().data() + i * cb, cb);
      }
      return;
    }
    case Kernel::concat_rows:
      if (ga) kt.axpy(1.0, g.data(), grad_a().data(), x->size());
      if (gb) kt.axpy(1.0, g.data() + x->size(), grad_b().data(), y->size());
      return;
    case Kernel::slice_cols: {
      if (!ga) return;
      Tensor& gx = grad_a();
      const std::size_t r = x->rows(), c = x->cols(), w = n.hi - n.lo;
      for (std::size_t i = 0; i < r; ++i) kt.axpy(1.0, g.data() + i * w, gx.data() + i * c + n.lo, w);
      return;
    }
    case Kernel::slice_rows:
      if (ga) kt.axpy(1.0, g.data(), grad_a().data() + n.lo * x->cols(), g.size());
      return;
    case Kernel::leaky_relu:
      if (ga) kt.leaky_relu_grad(x->data(), g.data(), grad_a().data(), g.size(), kLeakySlope);
      return;
    case Kernel::sigmoid: {
      if (!ga) return;
      Tensor& gx = grad_a();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      return;
    }
    case Kernel::tanh: {
      if (!ga) return;
      Tensor& gx = grad_a();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      return;
    }
    case Kernel::masked_softmax: {
      if (!ga) return;
      Tensor& gx = grad_a();
      const std::size_t r = x->rows(), c = x->cols();
      for (std::size_t i = 0; i < r; ++i) {
        const double* yrow = n.value.data() + i * c;
        const double* grow = g.data() + i * c;
        const double inner = kt.dot(yrow, grow, c);
        double* out = gx.data() + i * c;
        // Masked entries have y = 0 and therefore receive nothing.
        for (std::size_t j = 0; j < c; ++j) out[j] += yrow[j] * (grow[j] - inner);
      }
      return;
    }
    case Kernel::column_max: {
      if (!ga) return;
      Tensor& gx = grad_a();
      for (std::size_t j = 0; j < n.argmax.size(); ++j) gx(n.argmax[j], j) += g[j];
      return;
    }
    case Kernel::sum_squares:
      if (ga) kt.axpy(2.0 * g[0], x->data(), grad_a().data(), x->size());
      return;
    case Kernel::sum: {
      if (!ga) return;
      Tensor& gx = grad_a();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
      return;
    }
    case Kernel::outer_sum: {
      const std::size_t r = x->size(), c = y->size();
      if (ga) {
        Tensor& gu = grad_a();
        for (std::size_t i = 0; i < r; ++i) gu[i] += kt.sum(g.data() + i * c, c);
      }
      if (gb) {
        Tensor& gv = grad_b();
        for (std::size_t i = 0; i < r; ++i) kt.axpy(1.0, g.data() + i * c, gv.data(), c);
      }
      return;
    }
  }
}

GradientMap Tape::backward(Var loss) const {
  check_owner(loss);
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ContractError("backward: loss must be a single element, got shape " +
                        root.value.shape_string());
  }
  std::vector<Tensor> grads(loss.id() + 1);
  grads[loss.id()] = Tensor(root.value.shape(), 1.0);

  GradientMap result;
  for (std::size_t idx = loss.id() + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.needs_grad || grads[idx].empty()) continue;
    if (n.kernel == Kernel::leaf) continue;
    propagate(n, grads[idx], grads);
    grads[idx] = Tensor();
  }
  // Every parameter leaf appears in the map, zero when unreachable from loss.
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    const Node& n = nodes_[idx];
    if (!n.param) continue;
    auto [it, inserted] = result.grads_.try_emplace(*n.param, Tensor::zeros_like(n.value));
    if (!inserted && it->second.shape() != n.value.shape()) {
      throw ContractError("backward: parameter id " + std::to_string(*n.param) +
                          " bound to leaves of different shapes");
    }
    if (idx < grads.size() && !grads[idx].empty()) {
      simd::kernels().axpy(1.0, grads[idx].data(), it->second.data(), it->second.size());
    }
  }
  return result;
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> values;
  values.reserve(nodes_.size());
  for (const Node& original : nodes_) {
    Node n = original;
    const Tensor* x = n.arity >= 1 ? &values[n.in[0]] : nullptr;
    const Tensor* y = n.arity >= 2 ? &values[n.in[1]] : nullptr;
    values.push_back(evaluate(n, x, y));
  }
  return values;
}

}  // namespace stan::ad
