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

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "kernels_impl.hpp"
#include "stan/common/error.hpp"
#include "stan/simd/kernels.hpp"

namespace stan::simd {

const KernelTable* avx2_kernels() {
#if defined(STAN_HAVE_AVX2)
  return &detail::avx2_table();
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() {
#if defined(STAN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  throw ConfigError("unknown SIMD backend '" + std::string(name) + "'");
}

namespace {

const KernelTable* resolve(Backend backend) {
  if (backend == Backend::scalar) return &scalar_kernels();
  if (avx2_kernels() == nullptr || !cpu_supports_avx2()) {
    throw ConfigError("AVX2 backend requested but not available on this machine");
  }
  return avx2_kernels();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("STAN_SIMD"); env != nullptr && *env != '\0') {
    return resolve(parse_backend(env));
  }
  if (avx2_kernels() != nullptr && cpu_supports_avx2()) return avx2_kernels();
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void select_backend(Backend backend) { active().store(resolve(backend), std::memory_order_release); }

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  std::fill(c, c + m * n, 0.0);
  kernels().gemm_acc(a, k, 1, b, c, m, k, n);
}

void gemm_acc_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  // Transpose B once so the inner loop runs over contiguous columns of C.
  thread_local std::vector<double> bt;
  bt.resize(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  }
  kernels().gemm_acc(a, n, 1, bt.data(), c, m, n, k);
}

void gemm_acc_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  kernels().gemm_acc(a, 1, k, b, c, k, m, n);
}

}  // namespace stan::simd
