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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Double-precision vector kernels behind the model's inner loops.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// are compiled separately and chosen once at runtime from the CPU's feature
// flags. PROMPTLEAK_KERNELS=scalar|avx2 in the environment pins a backend,
// which also pins floating-point summation order for cross-machine
// reproducibility.
namespace promptleak::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = dot(rows + r * stride, v) for r in [0, row_count)
  void (*matvec)(const double* rows, std::size_t row_count, std::size_t stride,
                 const double* v, double* out);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the running CPU lacks the instruction set.
const KernelTable* avx2_kernels();

const KernelTable& active();
bool select(Backend backend);  // false if unavailable
Backend best_available();
std::string_view backend_name(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace promptleak::simd
