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

#ifndef VBSR_OBSERVATION_HPP_
#define VBSR_OBSERVATION_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "vbsr/core_types.hpp"

namespace vbsr {

/// Unnormalized PSF weights below this fraction of the row maximum are
/// dropped before the row is normalized.
inline constexpr double kPsfTruncation = 1e-8;

/// Compressed sparse rows. Column indices within a row are ascending.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  int RowBegin(int r) const { return row_ptr[r]; }
  int RowEnd(int r) const { return row_ptr[r + 1]; }
  std::vector<double> Multiply(std::span<const double> x) const;
  Eigen::MatrixXd ToDense() const;
};

/// Row-stochastic warp + blur + downsample operator for one frame.
struct TransformMatrix {
  CsrMatrix w;
  RegistrationParams phi;
};

/// dW/dphi_k for k in [theta, o_x, o_y, gamma]. Each matrix shares the
/// sparsity pattern of the TransformMatrix built at the same phi.
struct TransformJacobian {
  std::array<CsrMatrix, RegistrationParams::kSize> dw;
};

/// W(phi) together with its Jacobian, built in one pass.
struct LinearizedTransform {
  TransformMatrix w;
  TransformJacobian jacobian;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Centre of LR pixel \p lr_index in HR coordinates: scaled by alpha,
/// rotated by theta about the HR image centre, then shifted by (o_x, o_y).
/// HR pixel j = r * width + c has its centre at (c + 0.5, r + 0.5).
Point2 map_lr_center(const RegistrationParams& phi, int lr_index, const ImageGeometry& geom);

TransformMatrix build_w(const RegistrationParams& phi, const ImageGeometry& geom);
TransformJacobian build_w_jacobian(const RegistrationParams& phi, const ImageGeometry& geom);
LinearizedTransform linearize_w(const RegistrationParams& phi, const ImageGeometry& geom);

/// y_l = W(phi_l) x + noise with precision beta. Frame l draws its noise from
/// a generator seeded by (seed, l).
LrStack degrade(const HrImage& x, std::span<const RegistrationParams> phis, double beta,
                std::uint64_t seed, const ImageGeometry& geom);

/// Mean square of all noiseless LR pixels W(phi_l) x.
double signal_power(const HrImage& x, std::span<const RegistrationParams> phis,
                    const ImageGeometry& geom);

/// beta = 10^(snr_db / 10) / signal_power. Throws std::domain_error on an
/// all-zero signal.
double beta_from_snr(const HrImage& x, std::span<const RegistrationParams> phis, double snr_db,
                     const ImageGeometry& geom);

/// L independent draws from the registration prior; gamma is redrawn until
/// positive.
std::vector<RegistrationParams> sample_phi_prior(int frames, const ImageGeometry& geom,
                                                 std::uint64_t seed);

}  // namespace vbsr

#endif  // VBSR_OBSERVATION_HPP_
