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

#include "vbsr/observation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "vbsr/prior.hpp"

namespace vbsr {

namespace {

std::seed_seq MakeSeedSeq(std::uint64_t seed, std::uint64_t stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(stream >> 32)};
}

void CheckPhi(const RegistrationParams& phi) {
  if (!(phi.gamma > 0.0) || !std::isfinite(phi.gamma)) {
    throw std::domain_error("blur precision gamma must be positive, got " +
                            std::to_string(phi.gamma));
  }
  if (!std::isfinite(phi.theta) || !std::isfinite(phi.o_x) || !std::isfinite(phi.o_y)) {
    throw std::domain_error("registration parameters must be finite");
  }
}

LinearizedTransform Build(const RegistrationParams& phi, const ImageGeometry& geom,
                          bool with_jacobian) {
  geom.Validate();
  CheckPhi(phi);
  const int n_y = geom.n_y();
  const int n_x = geom.n_x();
  const double cx = 0.5 * geom.hr_width;
  const double cy = 0.5 * geom.hr_height;
  const double cos_t = std::cos(phi.theta);
  const double sin_t = std::sin(phi.theta);
  // exp(-gamma/2 (d2 - d2min)) >= kPsfTruncation
  const double max_excess = -2.0 * std::log(kPsfTruncation) / phi.gamma;

  LinearizedTransform out;
  CsrMatrix& w = out.w.w;
  out.w.phi = phi;
  w.rows = n_y;
  w.cols = n_x;
  w.row_ptr.assign(1, 0);
  std::array<std::vector<double>, 4> dvals;

  std::vector<double> d2(static_cast<std::size_t>(n_x));
  std::vector<double> grad(4);
  for (int i = 0; i < n_y; ++i) {
    const Point2 s = map_lr_center(phi, i, geom);
    // ds/dtheta = R'(theta) (p - c)
    const double px = geom.alpha * ((i % geom.lr_width) + 0.5) - cx;
    const double py = geom.alpha * ((i / geom.lr_width) + 0.5) - cy;
    const double ds_x = -sin_t * px - cos_t * py;
    const double ds_y = cos_t * px - sin_t * py;

    double d2_min = INFINITY;
    for (int j = 0; j < n_x; ++j) {
      const double dx = (j % geom.hr_width) + 0.5 - s.x;
      const double dy = (j / geom.hr_width) + 0.5 - s.y;
      d2[j] = dx * dx + dy * dy;
      d2_min = std::min(d2_min, d2[j]);
    }
    const int begin = static_cast<int>(w.col.size());
    double total = 0.0;
    for (int j = 0; j < n_x; ++j) {
      const double excess = d2[j] - d2_min;
      if (excess > max_excess) {
        continue;
      }
      const double e = std::exp(-0.5 * phi.gamma * excess);
      w.col.push_back(j);
      w.val.push_back(e);
      total += e;
    }
    const int end = static_cast<int>(w.col.size());
    for (int k = begin; k < end; ++k) {
      w.val[k] /= total;
    }
    w.row_ptr.push_back(end);
    if (!with_jacobian) {
      continue;
    }
    // d log e_j / dphi, then dw_j = w_j (dlog e_j - sum_j' w_j' dlog e_j').
    double mean[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t base = dvals[0].size();
    for (int k = begin; k < end; ++k) {
      const int j = w.col[k];
      const double dx = (j % geom.hr_width) + 0.5 - s.x;
      const double dy = (j / geom.hr_width) + 0.5 - s.y;
      const double g[4] = {phi.gamma * (dx * ds_x + dy * ds_y), phi.gamma * dx, phi.gamma * dy,
                           -0.5 * d2[j]};
      for (int p = 0; p < 4; ++p) {
        dvals[p].push_back(g[p]);
        mean[p] += w.val[k] * g[p];
      }
    }
    for (int k = begin; k < end; ++k) {
      const std::size_t idx = base + static_cast<std::size_t>(k - begin);
      for (int p = 0; p < 4; ++p) {
        dvals[p][idx] = w.val[k] * (dvals[p][idx] - mean[p]);
      }
    }
  }
  if (with_jacobian) {
    for (int p = 0; p < 4; ++p) {
      CsrMatrix& d = out.jacobian.dw[p];
      d.rows = w.rows;
      d.cols = w.cols;
      d.row_ptr = w.row_ptr;
      d.col = w.col;
      d.val = std::move(dvals[p]);
    }
  }
  return out;
}

}  // namespace

std::vector<double> CsrMatrix::Multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != cols) {
    throw std::invalid_argument("CsrMatrix::Multiply: size mismatch");
  }
  std::vector<double> y(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      sum += val[k] * x[col[k]];
    }
    y[r] = sum;
  }
  return y;
}

Eigen::MatrixXd CsrMatrix::ToDense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      dense(r, col[k]) = val[k];
    }
  }
  return dense;
}

Point2 map_lr_center(const RegistrationParams& phi, int lr_index, const ImageGeometry& geom) {
  if (lr_index < 0 || lr_index >= geom.n_y()) {
    throw std::out_of_range("LR pixel index " + std::to_string(lr_index) + " out of range");
  }
  const double cx = 0.5 * geom.hr_width;
  const double cy = 0.5 * geom.hr_height;
  const double px = geom.alpha * ((lr_index % geom.lr_width) + 0.5) - cx;
  const double py = geom.alpha * ((lr_index / geom.lr_width) + 0.5) - cy;
  const double c = std::cos(phi.theta);
  const double s = std::sin(phi.theta);
  return {c * px - s * py + cx + phi.o_x, s * px + c * py + cy + phi.o_y};
}

TransformMatrix build_w(const RegistrationParams& phi, const ImageGeometry& geom) {
  return Build(phi, geom, false).w;
}

TransformJacobian build_w_jacobian(const RegistrationParams& phi, const ImageGeometry& geom) {
  return Build(phi, geom, true).jacobian;
}

LinearizedTransform linearize_w(const RegistrationParams& phi, const ImageGeometry& geom) {
  return Build(phi, geom, true);
}

LrStack degrade(const HrImage& x, std::span<const RegistrationParams> phis, double beta,
                std::uint64_t seed, const ImageGeometry& geom) {
  if (!(beta > 0.0)) {
    throw std::domain_error("noise precision beta must be positive");
  }
  if (static_cast<int>(x.pixels.size()) != geom.n_x()) {
    throw std::invalid_argument("HR image size does not match geometry");
  }
  const double stddev = 1.0 / std::sqrt(beta);
  LrStack stack;
  stack.frames.reserve(phis.size());
  for (std::size_t l = 0; l < phis.size(); ++l) {
    std::vector<double> y = build_w(phis[l], geom).w.Multiply(x.pixels);
    auto seq = MakeSeedSeq(seed, l);
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, stddev);
    for (double& v : y) {
      v += noise(rng);
    }
    stack.frames.push_back(std::move(y));
  }
  return stack;
}

double signal_power(const HrImage& x, std::span<const RegistrationParams> phis,
                    const ImageGeometry& geom) {
  if (phis.empty()) {
    throw std::invalid_argument("signal_power needs at least one frame");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& phi : phis) {
    for (double v : build_w(phi, geom).w.Multiply(x.pixels)) {
      sum += v * v;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double beta_from_snr(const HrImage& x, std::span<const RegistrationParams> phis, double snr_db,
                     const ImageGeometry& geom) {
  const double power = signal_power(x, phis, geom);
  if (!(power > 0.0)) {
    throw std::domain_error("cannot set an SNR for an all-zero signal");
  }
  return std::pow(10.0, snr_db / 10.0) / power;
}

std::vector<RegistrationParams> sample_phi_prior(int frames, const ImageGeometry& geom,
                                                 std::uint64_t seed) {
  if (frames < 1) {
    throw std::invalid_argument("need at least one frame");
  }
  const RegistrationPrior prior = PriorConstants{}.Registration(geom.alpha);
  auto seq = MakeSeedSeq(seed, 0);
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<RegistrationParams> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int l = 0; l < frames; ++l) {
    Eigen::Vector4d v;
    for (int k = 0; k < 3; ++k) {
      v[k] = prior.mean[k] + std::sqrt(prior.cov(k, k)) * unit(rng);
    }
    do {
      v[3] = prior.mean[3] + std::sqrt(prior.cov(3, 3)) * unit(rng);
    } while (!(v[3] > 0.0));
    out.push_back(RegistrationParams::FromVector(v));
  }
  return out;
}

}  // namespace vbsr
