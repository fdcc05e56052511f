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

#include "vbsr/core_types.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

namespace vbsr {

ImageGeometry ImageGeometry::FromHr(int hr_width, int hr_height, int alpha) {
  if (alpha < 1 || hr_width < 1 || hr_height < 1) {
    throw std::invalid_argument("image sizes and alpha must be positive");
  }
  if (hr_width % alpha != 0 || hr_height % alpha != 0) {
    throw std::invalid_argument("alpha " + std::to_string(alpha) + " does not divide HR size " +
                                std::to_string(hr_width) + "x" + std::to_string(hr_height));
  }
  return {hr_width, hr_height, hr_width / alpha, hr_height / alpha, alpha};
}

ImageGeometry ImageGeometry::FromLr(int lr_width, int lr_height, int alpha) {
  if (alpha < 1 || lr_width < 1 || lr_height < 1) {
    throw std::invalid_argument("image sizes and alpha must be positive");
  }
  return {lr_width * alpha, lr_height * alpha, lr_width, lr_height, alpha};
}

void ImageGeometry::Validate() const {
  if (alpha < 1 || lr_width < 1 || lr_height < 1 || hr_width != alpha * lr_width ||
      hr_height != alpha * lr_height) {
    throw std::invalid_argument("inconsistent image geometry");
  }
}

double GammaParams::mean_log() const { return boost::math::digamma(a) - std::log(b); }

double GammaParams::entropy() const {
  return a - std::log(b) + std::lgamma(a) + (1.0 - a) * boost::math::digamma(a);
}

double log_gamma_pdf(double x, const GammaParams& p) {
  if (!(x > 0.0) || !(p.a > 0.0) || !(p.b > 0.0)) {
    throw std::domain_error("log_gamma_pdf requires x, a, b > 0");
  }
  return p.a * std::log(p.b) - std::lgamma(p.a) + (p.a - 1.0) * std::log(x) - p.b * x;
}

double log_gaussian_pdf(const Eigen::VectorXd& x, const GaussianParams& p) {
  const auto d = x.size();
  if (p.mu.size() != d || p.sigma.rows() != d || p.sigma.cols() != d) {
    throw std::invalid_argument("log_gaussian_pdf dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(p.sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("log_gaussian_pdf: covariance is not positive definite");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd z = llt.matrixL().solve(x - p.mu);
  return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det) -
         0.5 * z.squaredNorm();
}

std::vector<Bond> bond_index_map(const ImageGeometry& geom) {
  const int w = geom.hr_width;
  const int h = geom.hr_height;
  std::vector<Bond> bonds;
  bonds.reserve(static_cast<std::size_t>(geom.n_eta()));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c + 1 < w; ++c) {
      bonds.emplace_back(r * w + c, r * w + c + 1);
    }
  }
  for (int r = 0; r + 1 < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bonds.emplace_back(r * w + c, (r + 1) * w + c);
    }
  }
  return bonds;
}

}  // namespace vbsr
