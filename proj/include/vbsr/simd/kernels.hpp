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

#ifndef VBSR_SIMD_KERNELS_HPP_
#define VBSR_SIMD_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels behind the banded factorizations and the
// per-row PSF products. Every kernel has a scalar reference implementation;
// wider variants are picked once at startup from the CPU feature flags and
// must agree with the reference to rounding.

namespace vbsr::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view IsaName(Isa isa);
bool IsaSupported(Isa isa);

/// The ISA used by the dispatched kernels below.
Isa ActiveIsa();
/// Pins the dispatched kernels to \p isa. Throws std::invalid_argument if
/// the CPU lacks it. Not thread-safe against concurrent kernel calls.
void SetActiveIsa(Isa isa);

double Dot(const double* a, const double* b, std::size_t n);
/// y += alpha * x
void Axpy(double alpha, const double* x, double* y, std::size_t n);

inline double Dot(std::span<const double> a, std::span<const double> b) {
  return Dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}
inline void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  Axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

namespace scalar {
double Dot(const double* a, const double* b, std::size_t n);
void Axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define VBSR_HAVE_AVX2_KERNELS 1
namespace avx2 {
double Dot(const double* a, const double* b, std::size_t n);
void Axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace vbsr::simd

#endif  // VBSR_SIMD_KERNELS_HPP_
