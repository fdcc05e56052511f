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

#ifndef VBSR_BANDED_HPP_
#define VBSR_BANDED_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vbsr {

/// Symmetric n x n matrix whose nonzeros satisfy |i - j| <= bandwidth.
/// Only the lower band is stored, row by row, so that for a fixed row i the
/// entries (i, j) with max(0, i - bandwidth) <= j <= i are contiguous.
class SymmetricBand {
 public:
  SymmetricBand() = default;
  SymmetricBand(int n, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  /// Entry (i, j) in either triangle; zero outside the band.
  double operator()(int i, int j) const;
  /// Lower-triangle reference, requires 0 <= i - j <= bandwidth.
  double& Lower(int i, int j) { return data_[Offset(i, j)]; }
  double Lower(int i, int j) const { return data_[Offset(i, j)]; }

  /// Pointer to (i, j), j <= i. Entries (i, j..i) follow contiguously.
  double* RowPtr(int i, int j) { return data_.data() + Offset(i, j); }
  const double* RowPtr(int i, int j) const { return data_.data() + Offset(i, j); }

  /// First stored column of row i.
  int RowBegin(int i) const { return i > bw_ ? i - bw_ : 0; }

  void SetZero();
  double Trace() const;
  /// sum_ij this(i, j) * other(i, j) over the full symmetric matrices.
  double FrobeniusInner(const SymmetricBand& other) const;
  Eigen::MatrixXd ToDense() const;

 private:
  std::size_t Offset(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(bw_ + 1) +
           static_cast<std::size_t>(j - i + bw_);
  }

  int n_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

/// A = L L^T for a banded SPD matrix. The factor keeps the band of A.
class BandCholesky {
 public:
  /// Throws NumericalError if A is not numerically positive definite.
  explicit BandCholesky(const SymmetricBand& a);

  int size() const { return l_.size(); }
  double LogDet() const;
  std::vector<double> Solve(std::span<const double> b) const;
  /// Entries of A^-1 inside the band of A (Takahashi recurrences). Costs
  /// O(n * bandwidth^2), the same order as the factorization.
  SymmetricBand SelectedInverse() const;

 private:
  SymmetricBand l_;
};

}  // namespace vbsr

#endif  // VBSR_BANDED_HPP_
