// Copyright 2026 The promptleak Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "promptleak/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "simd/kernels_internal.hpp"

namespace promptleak::simd {

namespace {

constexpr KernelTable kScalar{Backend::kScalar, "scalar", &detail::dot_scalar,
                              &detail::axpy_scalar, &detail::matvec_scalar};

#if defined(PROMPTLEAK_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::kAvx2, "avx2", &detail::dot_avx2,
                            &detail::axpy_avx2, &detail::matvec_avx2};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* initial_table() {
  const char* env = std::getenv("PROMPTLEAK_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &kScalar;
  if (const KernelTable* avx2 = avx2_kernels()) return avx2;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#if defined(PROMPTLEAK_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  return *current().load(std::memory_order_acquire);
}

bool select(Backend backend) {
  const KernelTable* table =
      backend == Backend::kScalar ? &kScalar : avx2_kernels();
  if (table == nullptr) return false;
  current().store(table, std::memory_order_release);
  return true;
}

Backend best_available() {
  return avx2_kernels() != nullptr ? Backend::kAvx2 : Backend::kScalar;
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

}  // namespace promptleak::simd
