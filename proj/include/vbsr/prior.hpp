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

#ifndef VBSR_PRIOR_HPP_
#define VBSR_PRIOR_HPP_

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "vbsr/banded.hpp"
#include "vbsr/core_types.hpp"

namespace vbsr {

struct RegistrationPrior {
  Eigen::Vector4d mean;
  Eigen::Matrix4d cov;
};

/// Gamma hyperpriors and the Gaussian registration prior.
struct PriorConstants {
  GammaParams lambda{3e-2, 1e-2};
  GammaParams rho{1e-2, 1e-2};
  GammaParams kappa{1e-2, 1e-2};
  GammaParams beta{1e-2, 1e-2};
  /// Prior mean of gamma is blur_precision_scale / alpha^2, the precision of
  /// a Gaussian with the variance of an alpha-wide box.
  double blur_precision_scale = 12.0;
  std::array<double, 4> registration_variance{1e-3, 1.0, 1.0, 1e-3};

  RegistrationPrior Registration(int alpha) const;
};

/// A(eta, rho, kappa): rho * (graph Laplacian weighted by eta) + kappa * I on
/// the HR 4-neighbour grid, stored with bandwidth hr_width.
struct PrecisionMatrix {
  ImageGeometry geom;
  std::vector<double> eta;
  double rho = 0.0;
  double kappa = 0.0;
  SymmetricBand a;
};

/// eta may be relaxed to [0, 1]; A is affine in eta.
PrecisionMatrix build_a(std::span<const double> eta, double rho, double kappa,
                        const ImageGeometry& geom);

double logdet(const PrecisionMatrix& a);

/// d ln|A| / d eta_b = rho * (Z_ii + Z_jj - 2 Z_ij) with Z = A^-1, per bond.
std::vector<double> logdet_grad_eta(const PrecisionMatrix& a, const ImageGeometry& geom);

/// (d ln|A| / d ln rho, d ln|A| / d ln kappa). The two sum to N_x.
std::pair<double, double> logdet_grad_lnrho_lnkappa(const PrecisionMatrix& a);

/// Everything the first-order expansion of ln|A| needs, from one
/// factorization.
struct LogDetExpansion {
  double logdet = 0.0;
  std::vector<double> grad_eta;
  double d_lnrho = 0.0;
  double d_lnkappa = 0.0;
  /// A^-1 on the band of A.
  SymmetricBand inverse;
};

LogDetExpansion expand_logdet(const PrecisionMatrix& a);

struct TaylorExpansionPoint {
  std::vector<double> mu_eta;
  double ln_rho = 0.0;
  double ln_kappa = 0.0;
  double ln_lambda = 0.0;
};

/// Log of the (x, eta) normalizer of the compound prior with ln|A| replaced
/// by its tangent plane in (eta, ln rho, ln kappa) at the expansion point.
/// The tangent makes the eta sum factorize over bonds:
///
///   ln Z ~ (N_x/2) ln 2pi - 1/2 [c0 - g.mu + G_rho dln rho + G_kappa dln kappa]
///          + sum_b ln(exp(-lambda) + exp(-g_b / 2))
///
/// A further tangent in ln lambda keeps the lambda factor Gamma-conjugate.
class LogPartitionSurrogate {
 public:
  LogPartitionSurrogate(const ImageGeometry& geom, TaylorExpansionPoint point);

  const TaylorExpansionPoint& point() const { return point_; }
  const LogDetExpansion& expansion() const { return expansion_; }
  const PrecisionMatrix& precision() const { return a_; }

  /// Bond-factorized surrogate.
  double Value(double lambda, double rho, double kappa) const;
  /// Value() with the lambda dependence replaced by its tangent in ln lambda
  /// at the expansion point.
  double ValueLinearInLogLambda(double lambda, double rho, double kappa) const;

  /// d ln Z / d ln lambda at the expansion point: -lambda * sum_b P(eta_b = 0).
  double DLogLambda() const;
  double DLogRho() const { return -0.5 * expansion_.d_lnrho; }
  double DLogKappa() const { return -0.5 * expansion_.d_lnkappa; }

 private:
  double BondSum(double lambda) const;

  ImageGeometry geom_;
  TaylorExpansionPoint point_;
  PrecisionMatrix a_;
  LogDetExpansion expansion_;
  double constant_ = 0.0;
};

/// Convenience wrapper for LogPartitionSurrogate::Value.
double log_partition(double lambda, double rho, double kappa, const ImageGeometry& geom,
                     const TaylorExpansionPoint& expansion);

/// Exact log normalizer by enumerating all 2^N_eta line processes. Limited
/// to N_eta <= 24.
double log_partition_exact(double lambda, double rho, double kappa, const ImageGeometry& geom);

/// Exact d ln Z / d ln lambda = -lambda * E[#edges] by enumeration.
double log_partition_exact_dloglambda(double lambda, double rho, double kappa,
                                      const ImageGeometry& geom);

/// -lambda sum(1 - eta) - rho/2 sum eta (x_i - x_j)^2 - kappa/2 |x|^2.
double prior_log_density_unnorm(const HrImage& x, std::span<const double> eta,
                                const Hyperparams& h, const ImageGeometry& geom);

}  // namespace vbsr

#endif  // VBSR_PRIOR_HPP_
