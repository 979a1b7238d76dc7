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

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace stan::simd::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

template <class Op, class Tail>
inline void binary(const double* x, const double* y, double* out, std::size_t n, Op op,
                   Tail tail) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, op(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = tail(x[i], y[i]);
}

void add_avx2(const double* x, const double* y, double* out, std::size_t n) {
  binary(
      x, y, out, n, [](__m256d a, __m256d b) { return _mm256_add_pd(a, b); },
      [](double a, double b) { return a + b; });
}

void sub_avx2(const double* x, const double* y, double* out, std::size_t n) {
  binary(
      x, y, out, n, [](__m256d a, __m256d b) { return _mm256_sub_pd(a, b); },
      [](double a, double b) { return a - b; });
}

void mul_avx2(const double* x, const double* y, double* out, std::size_t n) {
  binary(
      x, y, out, n, [](__m256d a, __m256d b) { return _mm256_mul_pd(a, b); },
      [](double a, double b) { return a * b; });
}

void mul_acc_avx2(const double* x, const double* z, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i] * z[i];
}

void affine_avx2(double a, double b, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vb));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_squares_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void leaky_relu_avx2(const double* x, double* out, std::size_t n, double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d neg = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(v, _mm256_mul_pd(v, vs), neg));
  }
  for (; i < n; ++i) out[i] = x[i] >= 0.0 ? x[i] : slope * x[i];
}

void leaky_relu_grad_avx2(const double* x, const double* g, double* gx, std::size_t n,
                          double slope) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vs = _mm256_set1_pd(slope);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d neg = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_LT_OQ);
    const __m256d factor = _mm256_blendv_pd(one, vs, neg);
    _mm256_storeu_pd(gx + i, _mm256_fmadd_pd(_mm256_loadu_pd(g + i), factor,
                                             _mm256_loadu_pd(gx + i)));
  }
  for (; i < n; ++i) gx[i] += x[i] >= 0.0 ? g[i] : slope * g[i];
}

// Rows of C in blocks of R, columns in blocks of 8 then 4, scalar tail.
template <std::size_t R>
inline void gemm_rows(const double* a, std::size_t rs, std::size_t cs, const double* b, double* c,
                      std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d lo[R], hi[R];
    for (std::size_t r = 0; r < R; ++r) {
      lo[r] = _mm256_loadu_pd(c + r * n + j);
      hi[r] = _mm256_loadu_pd(c + r * n + j + 4);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
      const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
      for (std::size_t r = 0; r < R; ++r) {
        const __m256d av = _mm256_set1_pd(a[r * rs + p * cs]);
        lo[r] = _mm256_fmadd_pd(av, b0, lo[r]);
        hi[r] = _mm256_fmadd_pd(av, b1, hi[r]);
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      _mm256_storeu_pd(c + r * n + j, lo[r]);
      _mm256_storeu_pd(c + r * n + j + 4, hi[r]);
    }
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc[R];
    for (std::size_t r = 0; r < R; ++r) acc[r] = _mm256_loadu_pd(c + r * n + j);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * n + j);
      for (std::size_t r = 0; r < R; ++r) {
        acc[r] = _mm256_fmadd_pd(_mm256_set1_pd(a[r * rs + p * cs]), bv, acc[r]);
      }
    }
    for (std::size_t r = 0; r < R; ++r) _mm256_storeu_pd(c + r * n + j, acc[r]);
  }
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      double acc = c[r * n + j];
      for (std::size_t p = 0; p < k; ++p) acc += a[r * rs + p * cs] * b[p * n + j];
      c[r * n + j] = acc;
    }
  }
}

void gemm_acc_avx2(const double* a, std::size_t rs, std::size_t cs, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) gemm_rows<4>(a + i * rs, rs, cs, b, c + i * n, k, n);
  for (; i < m; ++i) gemm_rows<1>(a + i * rs, rs, cs, b, c + i * n, k, n);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Backend::avx2,    "avx2",          dot_avx2,  axpy_avx2,        add_avx2,
      sub_avx2,         mul_avx2,        mul_acc_avx2, affine_avx2,   sum_avx2,
      sum_squares_avx2, leaky_relu_avx2, leaky_relu_grad_avx2, gemm_acc_avx2,
  };
  return table;
}

}  // namespace stan::simd::detail
