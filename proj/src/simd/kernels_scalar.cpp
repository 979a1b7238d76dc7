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

#include "stan/simd/kernels.hpp"

#include "kernels_impl.hpp"

namespace stan::simd {
namespace {

double dot_ref(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_ref(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void sub_ref(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
}

void mul_ref(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc_ref(const double* x, const double* z, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * z[i];
}

void affine_ref(double a, double b, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b;
}

double sum_ref(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sum_squares_ref(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void leaky_relu_ref(const double* x, double* out, std::size_t n, double slope) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_grad_ref(const double* x, const double* g, double* gx, std::size_t n,
                         double slope) {
  for (std::size_t i = 0; i < n; ++i) gx[i] += x[i] >= 0.0 ? g[i] : slope * g[i];
}

void gemm_acc_ref(const double* a, std::size_t rs, std::size_t cs, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * rs + p * cs];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Backend::scalar, "scalar",     dot_ref,   axpy_ref,        add_ref,
      sub_ref,         mul_ref,      mul_acc_ref, affine_ref,    sum_ref,
      sum_squares_ref, leaky_relu_ref, leaky_relu_grad_ref, gemm_acc_ref,
  };
  return table;
}

}  // namespace stan::simd
