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

#ifndef VBSR_CORE_TYPES_HPP_
#define VBSR_CORE_TYPES_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vbsr {

/// Raised when a linear-algebra step meets a matrix that should be SPD but
/// is not, or when an update would leave a distribution improper.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// HR/LR raster sizes. Pixels are indexed row-major (index = row * width +
/// col) in both planes.
struct ImageGeometry {
  int hr_width = 0;
  int hr_height = 0;
  int lr_width = 0;
  int lr_height = 0;
  int alpha = 1;

  /// Throws std::invalid_argument unless alpha divides both HR sides.
  static ImageGeometry FromHr(int hr_width, int hr_height, int alpha);
  static ImageGeometry FromLr(int lr_width, int lr_height, int alpha);

  int n_x() const { return hr_width * hr_height; }
  int n_y() const { return lr_width * lr_height; }
  /// Number of 4-neighbour bonds: 2*N_x - width - height.
  int n_eta() const { return 2 * n_x() - hr_width - hr_height; }

  void Validate() const;

  bool operator==(const ImageGeometry&) const = default;
};

struct HrImage {
  std::vector<double> pixels;
};

struct LrStack {
  std::vector<std::vector<double>> frames;

  std::size_t size() const { return frames.size(); }
};

/// Per-frame registration: rotation, translation (HR pixels), and blur
/// precision (1 / HR pixel^2).
struct RegistrationParams {
  double theta = 0.0;
  double o_x = 0.0;
  double o_y = 0.0;
  double gamma = 1.0;

  static constexpr int kSize = 4;

  Eigen::Vector4d AsVector() const { return {theta, o_x, o_y, gamma}; }
  static RegistrationParams FromVector(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }
};

struct LineProcess {
  std::vector<std::uint8_t> eta;
};

struct Hyperparams {
  double lambda = 1.0;
  double rho = 1.0;
  double kappa = 1.0;
  double beta = 1.0;
};

struct GammaParams {
  double a = 1.0;  // shape
  double b = 1.0;  // rate

  double mean() const { return a / b; }
  /// <ln x> under the distribution.
  double mean_log() const;
  double entropy() const;
};

struct GaussianParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

struct BernoulliParams {
  std::vector<double> mu;
};

/// A 4-neighbour bond between pixels first < second.
using Bond = std::pair<int, int>;

double log_gamma_pdf(double x, const GammaParams& p);

/// Throws NumericalError if sigma is not positive definite.
double log_gaussian_pdf(const Eigen::VectorXd& x, const GaussianParams& p);

/// All horizontal bonds in row-major order, then all vertical bonds in
/// row-major order. This order indexes every eta-sized vector in the
/// library.
std::vector<Bond> bond_index_map(const ImageGeometry& geom);

}  // namespace vbsr

#endif  // VBSR_CORE_TYPES_HPP_
