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

#include "vbsr/banded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vbsr/core_types.hpp"
#include "vbsr/simd/kernels.hpp"

namespace vbsr {

SymmetricBand::SymmetricBand(int n, int bandwidth)
    : n_(n), bw_(std::max(0, std::min(bandwidth, n > 0 ? n - 1 : 0))) {
  if (n < 0) {
    throw std::invalid_argument("SymmetricBand: negative size");
  }
  data_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(bw_ + 1), 0.0);
}

double SymmetricBand::operator()(int i, int j) const {
  if (i < j) {
    std::swap(i, j);
  }
  if (i - j > bw_) {
    return 0.0;
  }
  return data_[Offset(i, j)];
}

void SymmetricBand::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

double SymmetricBand::Trace() const {
  double sum = 0.0;
  for (int i = 0; i < n_; ++i) {
    sum += Lower(i, i);
  }
  return sum;
}

double SymmetricBand::FrobeniusInner(const SymmetricBand& other) const {
  if (other.n_ != n_) {
    throw std::invalid_argument("FrobeniusInner: size mismatch");
  }
  const int bw = std::min(bw_, other.bw_);
  double off = 0.0;
  double diag = 0.0;
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - bw);
    if (j0 < i) {
      off += simd::Dot(RowPtr(i, j0), other.RowPtr(i, j0), static_cast<std::size_t>(i - j0));
    }
    diag += Lower(i, i) * other.Lower(i, i);
  }
  return diag + 2.0 * off;
}

Eigen::MatrixXd SymmetricBand::ToDense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = RowBegin(i); j <= i; ++j) {
      dense(i, j) = Lower(i, j);
      dense(j, i) = Lower(i, j);
    }
  }
  return dense;
}

BandCholesky::BandCholesky(const SymmetricBand& a) : l_(a.size(), a.bandwidth()) {
  const int n = a.size();
  for (int i = 0; i < n; ++i) {
    const int k0 = l_.RowBegin(i);
    const double* row_i = l_.RowPtr(i, k0);
    for (int j = k0; j <= i; ++j) {
      const double s = a.Lower(i, j) -
                       simd::Dot(row_i, l_.RowPtr(j, k0), static_cast<std::size_t>(j - k0));
      if (j < i) {
        l_.Lower(i, j) = s / l_.Lower(j, j);
      } else {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw NumericalError("band Cholesky: matrix not positive definite at row " +
                               std::to_string(i));
        }
        l_.Lower(i, i) = std::sqrt(s);
      }
    }
  }
}

double BandCholesky::LogDet() const {
  double sum = 0.0;
  for (int i = 0; i < l_.size(); ++i) {
    sum += std::log(l_.Lower(i, i));
  }
  return 2.0 * sum;
}

std::vector<double> BandCholesky::Solve(std::span<const double> b) const {
  const int n = l_.size();
  if (static_cast<int>(b.size()) != n) {
    throw std::invalid_argument("BandCholesky::Solve: size mismatch");
  }
  std::vector<double> x(b.begin(), b.end());
  for (int i = 0; i < n; ++i) {
    const int k0 = l_.RowBegin(i);
    x[i] = (x[i] - simd::Dot(l_.RowPtr(i, k0), x.data() + k0, static_cast<std::size_t>(i - k0))) /
           l_.Lower(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    x[i] /= l_.Lower(i, i);
    const int k0 = l_.RowBegin(i);
    simd::Axpy(-x[i], l_.RowPtr(i, k0), x.data() + k0, static_cast<std::size_t>(i - k0));
  }
  return x;
}

SymmetricBand BandCholesky::SelectedInverse() const {
  const int n = l_.size();
  const int bw = l_.bandwidth();
  SymmetricBand z(n, bw);
  std::vector<double> col(static_cast<std::size_t>(bw));
  std::vector<double> v(static_cast<std::size_t>(bw));
  for (int i = n - 1; i >= 0; --i) {
    const int m = std::min(bw, n - 1 - i);
    const double lii = l_.Lower(i, i);
    for (int k = 0; k < m; ++k) {
      col[k] = l_.Lower(i + 1 + k, i);
    }
    // v = Z[i+1..i+m, i+1..i+m] * col, using the lower band of each row.
    std::fill_n(v.begin(), m, 0.0);
    for (int k = 0; k < m; ++k) {
      const int row = i + 1 + k;
      const double* seg = z.RowPtr(row, i + 1);
      v[k] += simd::Dot(seg, col.data(), static_cast<std::size_t>(k)) + z.Lower(row, row) * col[k];
      simd::Axpy(col[k], seg, v.data(), static_cast<std::size_t>(k));
    }
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      z.Lower(i + 1 + k, i) = -v[k] / lii;
      acc += col[k] * v[k];
    }
    z.Lower(i, i) = (1.0 / lii + acc / lii) / lii;
  }
  return z;
}

}  // namespace vbsr
