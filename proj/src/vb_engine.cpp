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

#include "vbsr/vb_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "vbsr/simd/kernels.hpp"

namespace vbsr {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double Sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void CheckFrames(const LrStack& y, const ImageGeometry& geom) {
  if (y.frames.empty()) {
    throw std::invalid_argument("LR stack is empty");
  }
  for (const auto& f : y.frames) {
    if (static_cast<int>(f.size()) != geom.n_y()) {
      throw std::invalid_argument("LR frame size does not match geometry");
    }
  }
}

// Contiguous column runs of one sparse row, as (position, length).
void ColumnRuns(const int* cols, int s, std::vector<std::pair<int, int>>& runs) {
  runs.clear();
  int p = 0;
  while (p < s) {
    int q = p + 1;
    while (q < s && cols[q] == cols[q - 1] + 1) {
      ++q;
    }
    runs.emplace_back(p, q - p);
    p = q;
  }
}

// Expected squared difference across each bond under q(x).
std::vector<double> BondSecondMoments(const ImagePosterior& q_x, const ImageGeometry& geom) {
  const auto bonds = bond_index_map(geom);
  std::vector<double> out(bonds.size());
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto [i, j] = bonds[b];
    const double d = q_x.mu[i] - q_x.mu[j];
    out[b] = d * d + q_x.sigma(i, i) + q_x.sigma(j, j) - 2.0 * q_x.sigma(i, j);
  }
  return out;
}

double SumSquares(std::span<const double> v) { return simd::Dot(v.data(), v.data(), v.size()); }

// Factor V with S = V V^T for a PSD 4x4 matrix; columns with zero weight
// are dropped.
std::vector<Eigen::Vector4d> PsdFactor(const Eigen::Matrix4d& s) {
  std::vector<Eigen::Vector4d> cols;
  if (s.isZero(0.0)) {
    return cols;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(0.5 * (s + s.transpose()));
  for (int m = 0; m < 4; ++m) {
    const double e = eig.eigenvalues()[m];
    if (e > 0.0) {
      cols.push_back(eig.eigenvectors().col(m) * std::sqrt(e));
    }
  }
  return cols;
}

int RowSpan(const CsrMatrix& w) {
  int span = 0;
  for (int r = 0; r < w.rows; ++r) {
    if (w.RowEnd(r) > w.RowBegin(r)) {
      span = std::max(span, w.col[w.RowEnd(r) - 1] - w.col[w.RowBegin(r)]);
    }
  }
  return span;
}

}  // namespace

TrialState init_state(const LrStack& y, const ImageGeometry& geom, const PriorConstants& priors) {
  geom.Validate();
  CheckFrames(y, geom);
  TrialState s;
  s.q_eta.mu.assign(static_cast<std::size_t>(geom.n_eta()), 0.0);
  s.q_x.mu.assign(static_cast<std::size_t>(geom.n_x()), 0.0);
  s.q_x.sigma = SymmetricBand(geom.n_x(), 0);
  s.q_hyper = {priors.lambda, priors.rho, priors.kappa, priors.beta};
  const RegistrationPrior reg = priors.Registration(geom.alpha);
  s.q_phi.assign(y.frames.size(), RegistrationPosterior{reg.mean, reg.cov});
  s.t = 0;
  return s;
}

std::vector<LinearizedTransform> linearize_frames(const TrialState& s, const ImageGeometry& geom) {
  std::vector<LinearizedTransform> out;
  out.reserve(s.q_phi.size());
  for (const auto& q : s.q_phi) {
    out.push_back(linearize_w(RegistrationParams::FromVector(q.mu), geom));
  }
  return out;
}

BernoulliParams update_q_eta(const TrialState& s, const ImageGeometry& geom) {
  const double mu_lambda = s.q_hyper.lambda.mean();
  const double mu_rho = s.q_hyper.rho.mean();
  const std::vector<double> moments = BondSecondMoments(s.q_x, geom);
  BernoulliParams out;
  out.mu.resize(moments.size());
  for (std::size_t b = 0; b < moments.size(); ++b) {
    out.mu[b] = Sigmoid(mu_lambda - 0.5 * mu_rho * moments[b]);
  }
  return out;
}

ImagePosterior update_q_x(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                          std::span<const LinearizedTransform> frames) {
  CheckFrames(y, geom);
  if (frames.size() != y.frames.size() || s.q_phi.size() != y.frames.size()) {
    throw std::invalid_argument("update_q_x: frame count mismatch");
  }
  const int n = geom.n_x();
  const double mu_beta = s.q_hyper.beta.mean();
  const PrecisionMatrix a =
      build_a(s.q_eta.mu, s.q_hyper.rho.mean(), s.q_hyper.kappa.mean(), geom);

  int bw = a.a.bandwidth();
  for (const auto& f : frames) {
    bw = std::max(bw, RowSpan(f.w.w));
  }
  SymmetricBand precision(n, bw);
  for (int i = 0; i < n; ++i) {
    for (int j = a.a.RowBegin(i); j <= i; ++j) {
      precision.Lower(i, j) = a.a.Lower(i, j);
    }
  }
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);

  std::vector<std::pair<int, int>> runs;
  std::vector<double> block;
  std::vector<std::vector<double>> u;
  for (std::size_t l = 0; l < frames.size(); ++l) {
    const CsrMatrix& w = frames[l].w.w;
    const auto& dw = frames[l].jacobian.dw;
    // <W^T W> = W^T W + sum_m (dW v_m)^T (dW v_m) with Sigma_phi = sum_m v_m v_m^T.
    const std::vector<Eigen::Vector4d> factor = PsdFactor(s.q_phi[l].sigma);
    u.resize(1 + factor.size());
    for (int r = 0; r < w.rows; ++r) {
      const int begin = w.RowBegin(r);
      const int sz = w.RowEnd(r) - begin;
      if (sz == 0) {
        continue;
      }
      const int* cols = w.col.data() + begin;
      for (auto& v : u) {
        v.assign(static_cast<std::size_t>(sz), 0.0);
      }
      std::copy_n(w.val.data() + begin, sz, u[0].begin());
      for (std::size_t m = 0; m < factor.size(); ++m) {
        for (int k = 0; k < 4; ++k) {
          simd::Axpy(factor[m][k], dw[k].val.data() + begin, u[1 + m].data(),
                     static_cast<std::size_t>(sz));
        }
      }
      block.assign(static_cast<std::size_t>(sz) * sz, 0.0);
      for (const auto& v : u) {
        for (int p = 0; p < sz; ++p) {
          simd::Axpy(v[p], v.data(), block.data() + static_cast<std::size_t>(p) * sz,
                     static_cast<std::size_t>(p + 1));
        }
      }
      ColumnRuns(cols, sz, runs);
      for (int p = 0; p < sz; ++p) {
        const double* src = block.data() + static_cast<std::size_t>(p) * sz;
        for (const auto& [start, len] : runs) {
          if (start > p) {
            break;
          }
          const int stop = std::min(start + len, p + 1);
          double* dst = precision.RowPtr(cols[p], cols[start]);
          for (int q = start; q < stop; ++q) {
            dst[q - start] += mu_beta * src[q];
          }
        }
      }
      const double yr = mu_beta * y.frames[l][r];
      for (int p = 0; p < sz; ++p) {
        rhs[cols[p]] += yr * u[0][p];
      }
    }
  }

  ImagePosterior out;
  try {
    const BandCholesky chol(precision);
    out.mu = chol.Solve(rhs);
    out.sigma = chol.SelectedInverse();
    out.log_det_precision = chol.LogDet();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("q(x) precision is not SPD: ") + e.what());
  }
  return out;
}

ImagePosterior update_q_x(const TrialState& s, const LrStack& y, const ImageGeometry& geom) {
  return update_q_x(s, y, geom, linearize_frames(s, geom));
}

FrameMoments compute_frame_moments(const ImagePosterior& q_x, std::span<const double> y,
                                   const LinearizedTransform& frame) {
  const CsrMatrix& w = frame.w.w;
  const auto& dw = frame.jacobian.dw;
  FrameMoments out;
  out.w_mu = w.Multiply(q_x.mu);
  for (int k = 0; k < 4; ++k) {
    out.d_mu[k] = dw[k].Multiply(q_x.mu);
  }
  for (int r = 0; r < w.rows; ++r) {
    const double d = y[r] - out.w_mu[r];
    out.residual_sq += d * d;
  }
  if (q_x.sigma.bandwidth() == 0 && q_x.sigma.Trace() == 0.0) {
    return out;
  }

  std::vector<std::pair<int, int>> runs;
  std::vector<double> block;
  std::array<std::vector<double>, 5> t;
  std::array<const double*, 5> c{};
  for (int r = 0; r < w.rows; ++r) {
    const int begin = w.RowBegin(r);
    const int sz = w.RowEnd(r) - begin;
    if (sz == 0) {
      continue;
    }
    const int* cols = w.col.data() + begin;
    if (cols[sz - 1] - cols[0] > q_x.sigma.bandwidth()) {
      throw std::invalid_argument("PSF support exceeds the band of Sigma_x");
    }
    // Lower triangle of Sigma_x restricted to the row support.
    ColumnRuns(cols, sz, runs);
    block.assign(static_cast<std::size_t>(sz) * sz, 0.0);
    for (int p = 0; p < sz; ++p) {
      double* dst = block.data() + static_cast<std::size_t>(p) * sz;
      for (const auto& [start, len] : runs) {
        if (start > p) {
          break;
        }
        const int stop = std::min(start + len, p + 1);
        std::copy_n(q_x.sigma.RowPtr(cols[p], cols[start]), stop - start, dst + start);
      }
    }
    c[0] = w.val.data() + begin;
    for (int k = 0; k < 4; ++k) {
      c[k + 1] = dw[k].val.data() + begin;
    }
    for (int v = 0; v < 5; ++v) {
      t[v].assign(static_cast<std::size_t>(sz), 0.0);
      for (int p = 0; p < sz; ++p) {
        const double* row = block.data() + static_cast<std::size_t>(p) * sz;
        t[v][p] += simd::Dot(row, c[v], static_cast<std::size_t>(p)) + row[p] * c[v][p];
        simd::Axpy(c[v][p], row, t[v].data(), static_cast<std::size_t>(p));
      }
    }
    const auto n = static_cast<std::size_t>(sz);
    out.trace_ww += simd::Dot(c[0], t[0].data(), n);
    for (int k = 0; k < 4; ++k) {
      out.trace_dw[k] += simd::Dot(c[0], t[k + 1].data(), n);
      for (int kk = k; kk < 4; ++kk) {
        out.trace_dd(k, kk) += simd::Dot(c[kk + 1], t[k + 1].data(), n);
      }
    }
  }
  for (int k = 0; k < 4; ++k) {
    for (int kk = 0; kk < k; ++kk) {
      out.trace_dd(k, kk) = out.trace_dd(kk, k);
    }
  }
  return out;
}

std::vector<FrameMoments> compute_all_moments(const ImagePosterior& q_x, const LrStack& y,
                                              std::span<const LinearizedTransform> frames) {
  std::vector<FrameMoments> out;
  out.reserve(frames.size());
  for (std::size_t l = 0; l < frames.size(); ++l) {
    out.push_back(compute_frame_moments(q_x, y.frames[l], frames[l]));
  }
  return out;
}

namespace {

Eigen::Matrix4d DMuGram(const FrameMoments& m) {
  Eigen::Matrix4d g;
  for (int k = 0; k < 4; ++k) {
    for (int kk = k; kk < 4; ++kk) {
      g(k, kk) = simd::Dot(m.d_mu[k], m.d_mu[kk]);
      g(kk, k) = g(k, kk);
    }
  }
  return g;
}

// <|y - W(phi) x|^2> for W linearized at the frame mean, phi ~ N(mean, cov).
double ExpectedResidual(const FrameMoments& m, const Eigen::Matrix4d& phi_cov) {
  const Eigen::Matrix4d jj = DMuGram(m) + m.trace_dd;
  return m.residual_sq + m.trace_ww + (phi_cov.cwiseProduct(jj)).sum();
}

// Same, for phi ~ N(p + shift, cov) with W linearized at p.
double ExpectedResidual(const FrameMoments& m, std::span<const double> y,
                        const Eigen::Vector4d& shift, const Eigen::Matrix4d& phi_cov) {
  double residual = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    double pred = m.w_mu[r];
    for (int k = 0; k < 4; ++k) {
      pred += shift[k] * m.d_mu[k][r];
    }
    residual += (y[r] - pred) * (y[r] - pred);
  }
  const Eigen::Matrix4d second = phi_cov + shift * shift.transpose();
  return residual + m.trace_ww + 2.0 * shift.dot(m.trace_dw) +
         (second.cwiseProduct(m.trace_dd)).sum();
}

void RequireProper(const GammaParams& g, const char* name) {
  if (!(g.a > 0.0) || !(g.b > 0.0) || !std::isfinite(g.a) || !std::isfinite(g.b)) {
    throw NumericalError(std::string("improper Gamma update for ") + name);
  }
}

}  // namespace

HyperPosterior update_q_hyper(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                              std::span<const FrameMoments> moments,
                              const PriorConstants& priors) {
  CheckFrames(y, geom);
  if (moments.size() != y.frames.size()) {
    throw std::invalid_argument("update_q_hyper: frame count mismatch");
  }
  const LogPartitionSurrogate surrogate(
      geom, TaylorExpansionPoint{s.q_eta.mu, std::log(s.q_hyper.rho.mean()),
                                 std::log(s.q_hyper.kappa.mean()),
                                 std::log(s.q_hyper.lambda.mean())});
  const std::vector<double> bond_m2 = BondSecondMoments(s.q_x, geom);
  double edges_off = 0.0;
  double smooth = 0.0;
  for (std::size_t b = 0; b < bond_m2.size(); ++b) {
    edges_off += 1.0 - s.q_eta.mu[b];
    smooth += s.q_eta.mu[b] * bond_m2[b];
  }
  const double x_norm2 = SumSquares(s.q_x.mu) + s.q_x.sigma.Trace();

  double residual = 0.0;
  for (std::size_t l = 0; l < moments.size(); ++l) {
    residual += ExpectedResidual(moments[l], s.q_phi[l].sigma);
  }

  HyperPosterior out;
  out.lambda = {priors.lambda.a - surrogate.DLogLambda(), priors.lambda.b + edges_off};
  out.rho = {priors.rho.a - surrogate.DLogRho(), priors.rho.b + 0.5 * smooth};
  out.kappa = {priors.kappa.a - surrogate.DLogKappa(), priors.kappa.b + 0.5 * x_norm2};
  out.beta = {priors.beta.a + 0.5 * static_cast<double>(y.frames.size()) * geom.n_y(),
              priors.beta.b + 0.5 * residual};
  RequireProper(out.lambda, "lambda");
  RequireProper(out.rho, "rho");
  RequireProper(out.kappa, "kappa");
  RequireProper(out.beta, "beta");
  return out;
}

HyperPosterior update_q_hyper(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                              const PriorConstants& priors) {
  const auto frames = linearize_frames(s, geom);
  return update_q_hyper(s, y, geom, compute_all_moments(s.q_x, y, frames), priors);
}

std::vector<RegistrationPosterior> update_q_phi(const TrialState& s, const LrStack& y,
                                                const ImageGeometry& geom,
                                                std::span<const FrameMoments> moments,
                                                const PriorConstants& priors) {
  CheckFrames(y, geom);
  if (moments.size() != y.frames.size() || s.q_phi.size() != y.frames.size()) {
    throw std::invalid_argument("update_q_phi: frame count mismatch");
  }
  const RegistrationPrior prior = priors.Registration(geom.alpha);
  const Eigen::Matrix4d prior_precision = prior.cov.inverse();
  const double mu_beta = s.q_hyper.beta.mean();
  std::vector<RegistrationPosterior> out(moments.size());
  for (std::size_t l = 0; l < moments.size(); ++l) {
    const FrameMoments& m = moments[l];
    const Eigen::Vector4d& center = s.q_phi[l].mu;
    const Eigen::Matrix4d jj = DMuGram(m) + m.trace_dd;
    Eigen::Vector4d jr;
    for (int k = 0; k < 4; ++k) {
      double dot = 0.0;
      for (std::size_t r = 0; r < m.w_mu.size(); ++r) {
        dot += m.d_mu[k][r] * (y.frames[l][r] - m.w_mu[r]);
      }
      jr[k] = dot - m.trace_dw[k];
    }
    Eigen::Matrix4d precision = prior_precision + mu_beta * jj;
    precision = 0.5 * (precision + precision.transpose());
    const Eigen::Vector4d rhs = prior_precision * (prior.mean - center) + mu_beta * jr;
    Eigen::LLT<Eigen::Matrix4d> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("q(phi) precision is not SPD for frame " + std::to_string(l));
    }
    out[l].mu = center + llt.solve(rhs);
    out[l].sigma = llt.solve(Eigen::Matrix4d::Identity());
    out[l].sigma = 0.5 * (out[l].sigma + out[l].sigma.transpose());
    if (!(out[l].mu[3] > 0.0)) {
      throw NumericalError("blur precision mean left the positive axis for frame " +
                           std::to_string(l));
    }
  }
  return out;
}

std::vector<RegistrationPosterior> update_q_phi(const TrialState& s, const LrStack& y,
                                                const ImageGeometry& geom,
                                                const PriorConstants& priors) {
  const auto frames = linearize_frames(s, geom);
  return update_q_phi(s, y, geom, compute_all_moments(s.q_x, y, frames), priors);
}

TrialState sweep(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                 const PriorConstants& priors, std::vector<FrameMoments>* moments_out) {
  const auto frames = linearize_frames(s, geom);
  TrialState next;
  next.q_hyper = s.q_hyper;
  next.q_phi = s.q_phi;
  next.q_x = s.q_x;
  next.q_eta = update_q_eta(s, geom);
  next.q_x = update_q_x(next, y, geom, frames);
  const auto moments = compute_all_moments(next.q_x, y, frames);
  // Both of the last updates read the same snapshot.
  HyperPosterior hyper = update_q_hyper(next, y, geom, moments, priors);
  std::vector<RegistrationPosterior> phi = update_q_phi(next, y, geom, moments, priors);
  next.q_hyper = hyper;
  next.q_phi = std::move(phi);
  next.t = s.t + 1;
  if (moments_out != nullptr) {
    *moments_out = moments;
  }
  return next;
}

double x_residual(const TrialState& prev, const TrialState& next) {
  const std::size_t n = next.q_x.mu.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = next.q_x.mu[i] - prev.q_x.mu[i];
    sum += d * d;
  }
  return sum / static_cast<double>(n);
}

std::array<double, 4> phi_residual(const TrialState& prev, const TrialState& next,
                                   const EngineConfig& cfg) {
  std::array<double, 4> out{};
  const std::size_t frames = next.q_phi.size();
  for (int k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (std::size_t l = 0; l < frames; ++l) {
      const double d = next.q_phi[l].mu[k] - prev.q_phi[l].mu[k];
      sum += d * d / cfg.sigma2_phi[k];
    }
    out[k] = sum / static_cast<double>(frames);
  }
  return out;
}

bool check_convergence(const TrialState& prev, const TrialState& next, const EngineConfig& cfg) {
  if (!(x_residual(prev, next) < cfg.conv_tol)) {
    return false;
  }
  for (double r : phi_residual(prev, next, cfg)) {
    if (!(r < cfg.conv_tol)) {
      return false;
    }
  }
  return true;
}

LinearizationPoint sweep_linearization(const TrialState& s) {
  LinearizationPoint out;
  for (const auto& q : s.q_phi) {
    out.phi.push_back(q.mu);
  }
  out.lambda = s.q_hyper.lambda.mean();
  out.rho = s.q_hyper.rho.mean();
  out.kappa = s.q_hyper.kappa.mean();
  return out;
}

double free_energy(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                   const LinearizationPoint& point, const PriorConstants& priors,
                   std::span<const FrameMoments> moments) {
  CheckFrames(y, geom);
  const std::vector<Eigen::Vector4d>& linearization = point.phi;
  if (linearization.size() != y.frames.size() || s.q_phi.size() != y.frames.size()) {
    throw std::invalid_argument("free_energy: frame count mismatch");
  }
  const HyperPosterior& h = s.q_hyper;
  const double n_x = geom.n_x();
  const double frames_count = static_cast<double>(y.frames.size());

  // <ln p(Y | x, beta, Phi)>
  double residual = 0.0;
  if (!moments.empty() && moments.size() != y.frames.size()) {
    throw std::invalid_argument("free_energy: moment count mismatch");
  }
  for (std::size_t l = 0; l < y.frames.size(); ++l) {
    FrameMoments computed;
    if (moments.empty()) {
      const LinearizedTransform frame =
          linearize_w(RegistrationParams::FromVector(linearization[l]), geom);
      computed = compute_frame_moments(s.q_x, y.frames[l], frame);
    }
    const FrameMoments& m = moments.empty() ? computed : moments[l];
    residual += ExpectedResidual(m, y.frames[l], s.q_phi[l].mu - linearization[l],
                                 s.q_phi[l].sigma);
  }
  const double log_lik = 0.5 * frames_count * geom.n_y() * (h.beta.mean_log() - kLog2Pi) -
                         0.5 * h.beta.mean() * residual;

  // <ln p(x, eta | lambda, rho, kappa)> with the ln Z surrogate at the
  // state's own means.
  const LogPartitionSurrogate surrogate(
      geom, TaylorExpansionPoint{point.eta.empty() ? s.q_eta.mu : point.eta, std::log(point.rho),
                                 std::log(point.kappa), std::log(point.lambda)});
  const std::vector<double> bond_m2 = BondSecondMoments(s.q_x, geom);
  double edges_off = 0.0;
  double smooth = 0.0;
  for (std::size_t b = 0; b < bond_m2.size(); ++b) {
    edges_off += 1.0 - s.q_eta.mu[b];
    smooth += s.q_eta.mu[b] * bond_m2[b];
  }
  const double x_norm2 = SumSquares(s.q_x.mu) + s.q_x.sigma.Trace();
  const TaylorExpansionPoint& pt = surrogate.point();
  const double log_z = surrogate.Value(point.lambda, point.rho, point.kappa) +
                       surrogate.DLogLambda() * (h.lambda.mean_log() - pt.ln_lambda) +
                       surrogate.DLogRho() * (h.rho.mean_log() - pt.ln_rho) +
                       surrogate.DLogKappa() * (h.kappa.mean_log() - pt.ln_kappa);
  const double log_prior_x =
      -h.lambda.mean() * edges_off - 0.5 * (h.rho.mean() * smooth + h.kappa.mean() * x_norm2) -
      log_z;

  auto gamma_prior = [](const GammaParams& q, const GammaParams& p0) {
    return p0.a * std::log(p0.b) - std::lgamma(p0.a) + (p0.a - 1.0) * q.mean_log() -
           p0.b * q.mean();
  };
  const double log_prior_hyper = gamma_prior(h.lambda, priors.lambda) +
                                 gamma_prior(h.rho, priors.rho) +
                                 gamma_prior(h.kappa, priors.kappa) +
                                 gamma_prior(h.beta, priors.beta);

  const RegistrationPrior reg = priors.Registration(geom.alpha);
  const Eigen::Matrix4d reg_precision = reg.cov.inverse();
  const double reg_logdet = std::log(reg.cov.determinant());
  double log_prior_phi = 0.0;
  double entropy_phi = 0.0;
  for (const auto& q : s.q_phi) {
    const Eigen::Vector4d d = q.mu - reg.mean;
    log_prior_phi += -0.5 * (4.0 * kLog2Pi + reg_logdet) -
                     0.5 * (d.dot(reg_precision * d) + (reg_precision * q.sigma).trace());
    entropy_phi += 0.5 * (4.0 * (1.0 + kLog2Pi) + std::log(q.sigma.determinant()));
  }

  double entropy_eta = 0.0;
  for (double m : s.q_eta.mu) {
    if (m > 0.0) {
      entropy_eta -= m * std::log(m);
    }
    if (m < 1.0) {
      entropy_eta -= (1.0 - m) * std::log1p(-m);
    }
  }
  const double entropy_x = 0.5 * n_x * (1.0 + kLog2Pi) - 0.5 * s.q_x.log_det_precision;
  const double entropy_hyper =
      h.lambda.entropy() + h.rho.entropy() + h.kappa.entropy() + h.beta.entropy();

  return -(log_lik + log_prior_x + log_prior_hyper + log_prior_phi) -
         (entropy_eta + entropy_x + entropy_hyper + entropy_phi);
}

std::string check_state_invariants(const TrialState& s) {
  for (std::size_t b = 0; b < s.q_eta.mu.size(); ++b) {
    const double m = s.q_eta.mu[b];
    if (!(m >= 0.0 && m <= 1.0)) {
      return "mu_eta[" + std::to_string(b) + "] outside [0, 1]";
    }
  }
  const SymmetricBand& sig = s.q_x.sigma;
  for (int i = 0; i < sig.size(); ++i) {
    const double dii = sig.Lower(i, i);
    if (!(dii >= 0.0)) {
      return "Sigma_x has a negative diagonal at " + std::to_string(i);
    }
    for (int j = sig.RowBegin(i); j < i; ++j) {
      const double bound = std::sqrt(dii * sig.Lower(j, j));
      if (std::abs(sig.Lower(i, j)) > bound * (1.0 + 1e-9) + 1e-300) {
        return "Sigma_x violates |S_ij| <= sqrt(S_ii S_jj) at (" + std::to_string(i) + ", " +
               std::to_string(j) + ")";
      }
    }
  }
  const GammaParams* gammas[] = {&s.q_hyper.lambda, &s.q_hyper.rho, &s.q_hyper.kappa,
                                 &s.q_hyper.beta};
  for (const GammaParams* g : gammas) {
    if (!(g->a > 0.0) || !(g->b > 0.0)) {
      return "non-positive Gamma parameter";
    }
  }
  for (std::size_t l = 0; l < s.q_phi.size(); ++l) {
    const Eigen::Matrix4d& c = s.q_phi[l].sigma;
    if (!c.isApprox(c.transpose(), 1e-12)) {
      return "Sigma_phi not symmetric for frame " + std::to_string(l);
    }
    Eigen::LLT<Eigen::Matrix4d> llt(c);
    if (llt.info() != Eigen::Success) {
      return "Sigma_phi not positive definite for frame " + std::to_string(l);
    }
  }
  return {};
}

RunResult run(const LrStack& y, const ImageGeometry& geom, const EngineConfig& cfg,
              const PriorConstants& priors) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  TrialState state = init_state(y, geom, priors);
  for (int it = 0; it < cfg.max_iters; ++it) {
    std::vector<FrameMoments> moments;
    TrialState next = sweep(state, y, geom, priors, &moments);
    IterationRecord rec;
    rec.t = next.t;
    rec.mu_lambda = next.q_hyper.lambda.mean();
    rec.mu_rho = next.q_hyper.rho.mean();
    rec.mu_kappa = next.q_hyper.kappa.mean();
    rec.mu_beta = next.q_hyper.beta.mean();
    rec.x_residual = x_residual(state, next);
    rec.phi_residual = phi_residual(state, next, cfg);
    if (cfg.compute_free_energy) {
      rec.free_energy =
          free_energy(next, y, geom, sweep_linearization(state), priors, moments);
    }
    result.diagnostics.push_back(rec);
    const bool done = check_convergence(state, next, cfg);
    state = std::move(next);
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.iterations = state.t;
  result.estimate.pixels = state.q_x.mu;
  result.final_state = std::move(state);
  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace vbsr
