// Copyright 2026 The vbsr Authors
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

#include <atomic>
#include <stdexcept>
#include <string>

#include "vbsr/simd/kernels.hpp"

namespace vbsr::simd {

namespace {

struct KernelTable {
  Isa isa;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr KernelTable kScalarTable{Isa::kScalar, &scalar::Dot, &scalar::Axpy};
#ifdef VBSR_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table{Isa::kAvx2, &avx2::Dot, &avx2::Axpy};
#endif

const KernelTable* TableFor(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &kScalarTable;
    case Isa::kAvx2:
#ifdef VBSR_HAVE_AVX2_KERNELS
      return &kAvx2Table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* DetectBest() {
  if (IsaSupported(Isa::kAvx2)) {
    return TableFor(Isa::kAvx2);
  }
  return &kScalarTable;
}

std::atomic<const KernelTable*>& Active() {
  static std::atomic<const KernelTable*> table{DetectBest()};
  return table;
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool IsaSupported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(VBSR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa ActiveIsa() { return Active().load(std::memory_order_relaxed)->isa; }

void SetActiveIsa(Isa isa) {
  if (!IsaSupported(isa)) {
    throw std::invalid_argument("ISA not supported on this CPU: " + std::string(IsaName(isa)));
  }
  Active().store(TableFor(isa), std::memory_order_relaxed);
}

double Dot(const double* a, const double* b, std::size_t n) {
  return Active().load(std::memory_order_relaxed)->dot(a, b, n);
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  Active().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}

}  // namespace vbsr::simd
