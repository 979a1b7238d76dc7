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

// Dense double-precision inner loops used by the autodiff engine.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2+FMA variant is compiled into a separate translation unit and selected
// at startup when the CPU supports it. The STAN_SIMD environment variable
// ("scalar" or "avx2") overrides the automatic choice.
//
// The two backends agree to within rounding; they are not bit-identical
// because the vector variants use fused multiply-add and a different
// summation order. A process uses one backend throughout, so results are
// reproducible run to run on the same machine.

#include <cstddef>
#include <string_view>

namespace stan::simd {

enum class Backend { scalar, avx2 };

struct KernelTable {
  Backend backend;
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out = x + y, x - y, x * y (elementwise); out may alias x or y
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // y += x * z
  void (*mul_acc)(const double* x, const double* z, double* y, std::size_t n);
  // out = a * x + b
  void (*affine)(double a, double b, const double* x, double* out, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  void (*leaky_relu)(const double* x, double* out, std::size_t n, double slope);
  // gx += g * (x >= 0 ? 1 : slope)
  void (*leaky_relu_grad)(const double* x, const double* g, double* gx, std::size_t n,
                          double slope);
  // C(m x n) += A B with B (k x n) and C row-major and contiguous; element
  // A(r, p) is read from a[r * row_stride + p * col_stride].
  void (*gemm_acc)(const double* a, std::size_t row_stride, std::size_t col_stride,
                   const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports_avx2();

// Backend used by the engine. Resolved once on first use.
const KernelTable& kernels();

// Switch the active backend (tests and benchmarks). Throws stan::ConfigError
// when the requested backend is unavailable on this machine.
void select_backend(Backend backend);

Backend parse_backend(std::string_view name);

// Row-major dense products on top of the active table.
//   gemm      : C  = A(m x k) * B(k x n)
//   gemm_acc_nt: C += A(m x n) * B(k x n)^T      -> C is m x k
//   gemm_acc_tn: C += A(m x k)^T * B(m x n)      -> C is k x n
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);
void gemm_acc_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k);
void gemm_acc_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n);

}  // namespace stan::simd
