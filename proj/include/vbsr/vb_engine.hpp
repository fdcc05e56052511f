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

#ifndef VBSR_VB_ENGINE_HPP_
#define VBSR_VB_ENGINE_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vbsr/banded.hpp"
#include "vbsr/core_types.hpp"
#include "vbsr/observation.hpp"
#include "vbsr/prior.hpp"

namespace vbsr {

struct EngineConfig {
  int max_iters = 500;
  double conv_tol = 1e-5;
  /// Per-component scale of the registration convergence test.
  std::array<double, 4> sigma2_phi{1e-3, 1.0, 1.0, 1e-3};
  bool compute_free_energy = true;
};

struct RegistrationPosterior {
  Eigen::Vector4d mu = Eigen::Vector4d::Zero();
  Eigen::Matrix4d sigma = Eigen::Matrix4d::Zero();
};

/// q(x) = N(mu, Lambda^-1). Only the entries of Lambda^-1 inside the band of
/// Lambda are kept; every expectation the updates take reads no others.
struct ImagePosterior {
  std::vector<double> mu;
  SymmetricBand sigma;
  /// ln|Lambda|; meaningless while sigma is the all-zero initial value.
  double log_det_precision = 0.0;
};

struct HyperPosterior {
  GammaParams lambda;
  GammaParams rho;
  GammaParams kappa;
  GammaParams beta;
};

struct TrialState {
  BernoulliParams q_eta;
  ImagePosterior q_x;
  HyperPosterior q_hyper;
  std::vector<RegistrationPosterior> q_phi;
  int t = 0;
};

/// Expectations of one frame's data term under q(x), with W linearized at
/// the frame's registration mean.
struct FrameMoments {
  std::vector<double> w_mu;                  // W mu
  std::array<std::vector<double>, 4> d_mu;   // dW_k mu
  double residual_sq = 0.0;                  // |y - W mu|^2
  double trace_ww = 0.0;                     // tr(W^T W Sigma_x)
  Eigen::Matrix4d trace_dd = Eigen::Matrix4d::Zero();  // tr(dW_k^T dW_k' Sigma_x)
  Eigen::Vector4d trace_dw = Eigen::Vector4d::Zero();  // tr(dW_k^T W Sigma_x)
};

struct IterationRecord {
  int t = 0;
  double mu_lambda = 0.0;
  double mu_rho = 0.0;
  double mu_kappa = 0.0;
  double mu_beta = 0.0;
  double x_residual = 0.0;
  std::array<double, 4> phi_residual{};
  double free_energy = 0.0;
};

struct RunResult {
  HrImage estimate;
  bool converged = false;
  int iterations = 0;
  double wall_ms = 0.0;
  std::vector<IterationRecord> diagnostics;
  TrialState final_state;
};

/// mu_eta = 0, mu_x = 0, Sigma_x = 0; hyperparameters and registrations start
/// at their priors.
TrialState init_state(const LrStack& y, const ImageGeometry& geom,
                      const PriorConstants& priors = {});

/// W and dW/dphi for every frame at the current registration means.
std::vector<LinearizedTransform> linearize_frames(const TrialState& s, const ImageGeometry& geom);

BernoulliParams update_q_eta(const TrialState& s, const ImageGeometry& geom);

/// Uses s.q_eta as already updated for this sweep.
ImagePosterior update_q_x(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                          std::span<const LinearizedTransform> frames);
ImagePosterior update_q_x(const TrialState& s, const LrStack& y, const ImageGeometry& geom);

FrameMoments compute_frame_moments(const ImagePosterior& q_x, std::span<const double> y,
                                   const LinearizedTransform& frame);
std::vector<FrameMoments> compute_all_moments(const ImagePosterior& q_x, const LrStack& y,
                                              std::span<const LinearizedTransform> frames);

/// Gamma updates for (lambda, rho, kappa, beta). The ln Z expansion point is
/// (s.q_eta, ln E[rho], ln E[kappa], ln E[lambda]) taken from s.
HyperPosterior update_q_hyper(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                              std::span<const FrameMoments> moments,
                              const PriorConstants& priors = {});
HyperPosterior update_q_hyper(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                              const PriorConstants& priors = {});

/// Gaussian registration updates with W re-linearized at s.q_phi means and
/// the noise precision taken from s.q_hyper.
std::vector<RegistrationPosterior> update_q_phi(const TrialState& s, const LrStack& y,
                                                const ImageGeometry& geom,
                                                std::span<const FrameMoments> moments,
                                                const PriorConstants& priors = {});
std::vector<RegistrationPosterior> update_q_phi(const TrialState& s, const LrStack& y,
                                                const ImageGeometry& geom,
                                                const PriorConstants& priors = {});

/// One full sweep: eta, then x, then (hyper, phi) from the same snapshot.
/// moments_out receives the frame moments of the new q(x) at the
/// registration means of s.
TrialState sweep(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                 const PriorConstants& priors = {},
                 std::vector<FrameMoments>* moments_out = nullptr);

double x_residual(const TrialState& prev, const TrialState& next);
std::array<double, 4> phi_residual(const TrialState& prev, const TrialState& next,
                                   const EngineConfig& cfg);
/// Strict inequalities on both residuals.
bool check_convergence(const TrialState& prev, const TrialState& next, const EngineConfig& cfg);

/// Where the free energy takes its Taylor surrogates: W_l linearized at
/// phi[l], ln Z expanded at (eta, ln lambda, ln rho, ln kappa). An empty eta
/// means the state's own mu_eta.
struct LinearizationPoint {
  std::vector<Eigen::Vector4d> phi;
  std::vector<double> eta;
  double lambda = 1.0;
  double rho = 1.0;
  double kappa = 1.0;
};

/// The point a sweep starting from s linearizes at: the registration and
/// hyperparameter means of s. eta is left empty, so ln Z is expanded at the
/// mu_eta of whichever state is evaluated, as the hyperparameter update of
/// that sweep did.
LinearizationPoint sweep_linearization(const TrialState& s);

/// Variational free energy <ln q - ln p(Y, z)> under the surrogates taken at
/// `point`. The PSF support at point.phi must lie inside the band of
/// s.q_x.sigma; sweep_linearization(prev) satisfies this for the state a
/// sweep from prev returns.
/// `moments`, when given, must be compute_all_moments of s.q_x at point.phi.
double free_energy(const TrialState& s, const LrStack& y, const ImageGeometry& geom,
                   const LinearizationPoint& point, const PriorConstants& priors = {},
                   std::span<const FrameMoments> moments = {});

/// Empty string if every trial-distribution invariant holds, else a
/// description of the first violation.
std::string check_state_invariants(const TrialState& s);

RunResult run(const LrStack& y, const ImageGeometry& geom, const EngineConfig& cfg = {},
              const PriorConstants& priors = {});

}  // namespace vbsr

#endif  // VBSR_VB_ENGINE_HPP_
