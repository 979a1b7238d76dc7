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

#include "stan/autodiff/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "stan/common/error.hpp"

namespace stan::ad {
namespace {

std::size_t extent_product(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor: shape must have at least one extent");
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor: zero extent in shape " + shape_string(shape));
    n *= e;
  }
  return n;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  values_.assign(extent_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (extent_product(shape_) != values_.size()) {
    throw DimensionError("tensor: shape " + stan::ad::shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n, 1}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  return values_.size() / shape_[0];
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw ContractError("tensor: item() on non-scalar shape " + stan::ad::shape_string(shape_));
  }
  return values_[0];
}

std::string Tensor::shape_string() const { return stan::ad::shape_string(shape_); }

bool Tensor::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace stan::ad
