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

#include "vbsr/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vbsr {

namespace {

double Softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double Sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

RegistrationPrior PriorConstants::Registration(int alpha) const {
  RegistrationPrior prior;
  prior.mean = {0.0, 0.0, 0.0, blur_precision_scale / (static_cast<double>(alpha) * alpha)};
  prior.cov = Eigen::Matrix4d::Zero();
  for (int k = 0; k < 4; ++k) {
    prior.cov(k, k) = registration_variance[k];
  }
  return prior;
}

PrecisionMatrix build_a(std::span<const double> eta, double rho, double kappa,
                        const ImageGeometry& geom) {
  if (!(rho > 0.0) || !(kappa > 0.0)) {
    throw std::domain_error("build_a requires rho > 0 and kappa > 0");
  }
  if (static_cast<int>(eta.size()) != geom.n_eta()) {
    throw std::invalid_argument("line process has " + std::to_string(eta.size()) +
                                " entries, expected " + std::to_string(geom.n_eta()));
  }
  PrecisionMatrix out;
  out.geom = geom;
  out.eta.assign(eta.begin(), eta.end());
  out.rho = rho;
  out.kappa = kappa;
  out.a = SymmetricBand(geom.n_x(), geom.hr_width);
  for (int i = 0; i < geom.n_x(); ++i) {
    out.a.Lower(i, i) = kappa;
  }
  const auto bonds = bond_index_map(geom);
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const double e = eta[b];
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::domain_error("line process entries must lie in [0, 1]");
    }
    const auto [i, j] = bonds[b];
    out.a.Lower(i, i) += rho * e;
    out.a.Lower(j, j) += rho * e;
    out.a.Lower(j, i) -= rho * e;
  }
  return out;
}

double logdet(const PrecisionMatrix& a) { return BandCholesky(a.a).LogDet(); }

LogDetExpansion expand_logdet(const PrecisionMatrix& a) {
  const BandCholesky chol(a.a);
  LogDetExpansion out;
  out.logdet = chol.LogDet();
  out.inverse = chol.SelectedInverse();
  const auto bonds = bond_index_map(a.geom);
  out.grad_eta.resize(bonds.size());
  double d_lnrho = 0.0;
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto [i, j] = bonds[b];
    const double resistance =
        out.inverse.Lower(i, i) + out.inverse.Lower(j, j) - 2.0 * out.inverse.Lower(j, i);
    out.grad_eta[b] = a.rho * resistance;
    d_lnrho += a.eta[b] * out.grad_eta[b];
  }
  out.d_lnrho = d_lnrho;
  out.d_lnkappa = a.kappa * out.inverse.Trace();
  return out;
}

std::vector<double> logdet_grad_eta(const PrecisionMatrix& a, const ImageGeometry& geom) {
  if (!(geom == a.geom)) {
    throw std::invalid_argument("logdet_grad_eta: geometry mismatch");
  }
  return expand_logdet(a).grad_eta;
}

std::pair<double, double> logdet_grad_lnrho_lnkappa(const PrecisionMatrix& a) {
  const LogDetExpansion e = expand_logdet(a);
  return {e.d_lnrho, e.d_lnkappa};
}

LogPartitionSurrogate::LogPartitionSurrogate(const ImageGeometry& geom, TaylorExpansionPoint point)
    : geom_(geom),
      point_(std::move(point)),
      a_(build_a(point_.mu_eta, std::exp(point_.ln_rho), std::exp(point_.ln_kappa), geom)),
      expansion_(expand_logdet(a_)) {
  double g_dot_mu = 0.0;
  for (std::size_t b = 0; b < expansion_.grad_eta.size(); ++b) {
    g_dot_mu += expansion_.grad_eta[b] * point_.mu_eta[b];
  }
  constant_ = 0.5 * geom_.n_x() * kLog2Pi - 0.5 * (expansion_.logdet - g_dot_mu);
}

double LogPartitionSurrogate::BondSum(double lambda) const {
  double sum = 0.0;
  for (double g : expansion_.grad_eta) {
    sum += -0.5 * g + Softplus(0.5 * g - lambda);
  }
  return sum;
}

double LogPartitionSurrogate::Value(double lambda, double rho, double kappa) const {
  if (!(lambda > 0.0) || !(rho > 0.0) || !(kappa > 0.0)) {
    throw std::domain_error("log partition requires positive hyperparameters");
  }
  return constant_ -
         0.5 * (expansion_.d_lnrho * (std::log(rho) - point_.ln_rho) +
                expansion_.d_lnkappa * (std::log(kappa) - point_.ln_kappa)) +
         BondSum(lambda);
}

double LogPartitionSurrogate::ValueLinearInLogLambda(double lambda, double rho,
                                                     double kappa) const {
  const double lambda0 = std::exp(point_.ln_lambda);
  return Value(lambda0, rho, kappa) + DLogLambda() * (std::log(lambda) - point_.ln_lambda);
}

double LogPartitionSurrogate::DLogLambda() const {
  const double lambda0 = std::exp(point_.ln_lambda);
  double off = 0.0;
  for (double g : expansion_.grad_eta) {
    off += Sigmoid(0.5 * g - lambda0);
  }
  return -lambda0 * off;
}

double log_partition(double lambda, double rho, double kappa, const ImageGeometry& geom,
                     const TaylorExpansionPoint& expansion) {
  return LogPartitionSurrogate(geom, expansion).Value(lambda, rho, kappa);
}

namespace {

// Calls fn(log_weight, edges_off) for every line process configuration.
template <typename Fn>
void EnumerateLineProcesses(double lambda, double rho, double kappa, const ImageGeometry& geom,
                            Fn&& fn) {
  if (!(lambda > 0.0) || !(rho > 0.0) || !(kappa > 0.0)) {
    throw std::domain_error("log partition requires positive hyperparameters");
  }
  const int n_eta = geom.n_eta();
  if (n_eta > 24) {
    throw std::invalid_argument("exact enumeration limited to 24 bonds");
  }
  std::vector<double> eta(static_cast<std::size_t>(n_eta));
  const std::uint64_t count = std::uint64_t{1} << n_eta;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    int off = 0;
    for (int b = 0; b < n_eta; ++b) {
      eta[b] = (mask >> b) & 1u ? 1.0 : 0.0;
      off += eta[b] == 0.0 ? 1 : 0;
    }
    const double ld = logdet(build_a(eta, rho, kappa, geom));
    fn(-lambda * off - 0.5 * (ld - geom.n_x() * kLog2Pi), off);
  }
}

}  // namespace

double log_partition_exact(double lambda, double rho, double kappa, const ImageGeometry& geom) {
  std::vector<double> terms;
  EnumerateLineProcesses(lambda, rho, kappa, geom,
                         [&](double log_w, int) { terms.push_back(log_w); });
  double peak = -INFINITY;
  for (double t : terms) {
    peak = std::max(peak, t);
  }
  double sum = 0.0;
  for (double t : terms) {
    sum += std::exp(t - peak);
  }
  return peak + std::log(sum);
}

double log_partition_exact_dloglambda(double lambda, double rho, double kappa,
                                      const ImageGeometry& geom) {
  std::vector<std::pair<double, int>> terms;
  EnumerateLineProcesses(lambda, rho, kappa, geom,
                         [&](double log_w, int off) { terms.emplace_back(log_w, off); });
  double peak = -INFINITY;
  for (const auto& t : terms) {
    peak = std::max(peak, t.first);
  }
  double total = 0.0;
  double weighted_off = 0.0;
  for (const auto& [log_w, off] : terms) {
    const double w = std::exp(log_w - peak);
    total += w;
    weighted_off += w * off;
  }
  return -lambda * weighted_off / total;
}

double prior_log_density_unnorm(const HrImage& x, std::span<const double> eta,
                                const Hyperparams& h, const ImageGeometry& geom) {
  if (static_cast<int>(x.pixels.size()) != geom.n_x() ||
      static_cast<int>(eta.size()) != geom.n_eta()) {
    throw std::invalid_argument("prior_log_density_unnorm: size mismatch");
  }
  const auto bonds = bond_index_map(geom);
  double off = 0.0;
  double smooth = 0.0;
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const double d = x.pixels[bonds[b].first] - x.pixels[bonds[b].second];
    off += 1.0 - eta[b];
    smooth += eta[b] * d * d;
  }
  double norm2 = 0.0;
  for (double v : x.pixels) {
    norm2 += v * v;
  }
  return -h.lambda * off - 0.5 * h.rho * smooth - 0.5 * h.kappa * norm2;
}

}  // namespace vbsr
