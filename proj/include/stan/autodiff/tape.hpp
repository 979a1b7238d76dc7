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

#pragma once

// Define-by-run reverse-mode differentiation.
//
// Every kernel call appends one node to the tape holding its output value and
// whatever activations the backward rule needs. The tape is append-only, so
// node order is a topological order. backward() walks it in reverse and
// accumulates adjoints; it does not mutate the tape, so calling it repeatedly
// yields identical gradients.
//
// A tape and the Vars it hands out belong to one thread.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "stan/autodiff/tensor.hpp"

namespace stan::ad {

using NodeId = std::uint32_t;
using ParamId = std::size_t;

inline constexpr double kLeakySlope = 0.01;

enum class Kernel : std::uint8_t {
  leaf,
  matmul,
  add,
  add_row,      // matrix + broadcast 1 x n row
  sub,
  mul,          // elementwise
  affine,       // a * x + b, scalar a and b ("scalar-scale")
  concat_cols,  // [A | B], equal row counts ("row-concat")
  concat_rows,  // [A ; B], equal column counts
  slice_cols,
  slice_rows,
  leaky_relu,
  sigmoid,
  tanh,
  masked_softmax,  // row-wise over entries whose mask bit is set
  column_max,
  sum_squares,
  sum,
  outer_sum,  // out(i, j) = u[i] + v[j]
};

std::string_view kernel_name(Kernel k) noexcept;

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives and
// has not been cleared.
class Var {
 public:
  Var() = default;

  NodeId id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// d loss / d parameter for every parameter leaf on the tape.
class GradientMap {
 public:
  const Tensor& at(ParamId id) const;
  bool contains(ParamId id) const { return grads_.count(id) != 0; }
  std::size_t size() const noexcept { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  friend class Tape;
  std::map<ParamId, Tensor> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that receives a gradient under `id`. Several leaves may share an id;
  // their gradients are summed.
  Var parameter(ParamId id, Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var x, double scale, double shift);
  Var concat_cols(Var a, Var b);
  Var concat_rows(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  Var slice_rows(Var a, std::size_t begin, std::size_t end);
  Var leaky_relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  // mask is rows x cols of 0/1; every row needs at least one set entry.
  Var masked_softmax(Var logits, std::shared_ptr<const std::vector<std::uint8_t>> mask);
  Var softmax(Var logits);
  Var column_max(Var x);
  Var sum_squares(Var x);
  Var sum(Var x);
  Var outer_sum(Var u, Var v);

  const Tensor& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  Kernel kernel(NodeId id) const { return nodes_.at(id).kernel; }

  // Reverse sweep from a single-element node.
  GradientMap backward(Var loss) const;

  // Re-executes every recorded kernel from the stored leaf values and returns
  // the recomputed node values in tape order.
  std::vector<Tensor> replay() const;

  void clear() noexcept { nodes_.clear(); }

 private:
  struct Node {
    Kernel kernel = Kernel::leaf;
    std::uint8_t arity = 0;
    bool needs_grad = false;
    NodeId in[2] = {0, 0};
    Tensor value;
    double a = 0.0;
    double b = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::shared_ptr<const std::vector<std::uint8_t>> mask;
    std::vector<std::size_t> argmax;
    std::optional<ParamId> param;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_owner(Var v) const;
  static Tensor evaluate(Node& n, const Tensor* x, const Tensor* y);
  void propagate(const Node& n, const Tensor& g, std::vector<Tensor>& grads) const;

  std::vector<Node> nodes_;
};

// Free-function spellings used by model code.
inline Var matmul(Var a, Var b) { return a.tape()->matmul(a, b); }
inline Var add(Var a, Var b) { return a.tape()->add(a, b); }
inline Var add_row(Var a, Var row) { return a.tape()->add_row(a, row); }
inline Var sub(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var mul(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var affine(Var x, double scale, double shift) { return x.tape()->affine(x, scale, shift); }
inline Var scale(Var x, double s) { return x.tape()->affine(x, s, 0.0); }
inline Var leaky_relu(Var x) { return x.tape()->leaky_relu(x); }
inline Var sigmoid(Var x) { return x.tape()->sigmoid(x); }
inline Var tanh(Var x) { return x.tape()->tanh(x); }
inline Var column_max(Var x) { return x.tape()->column_max(x); }
inline Var sum_squares(Var x) { return x.tape()->sum_squares(x); }
inline Var sum(Var x) { return x.tape()->sum(x); }

}  // namespace stan::ad
