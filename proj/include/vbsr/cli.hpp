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

#ifndef VBSR_CLI_HPP_
#define VBSR_CLI_HPP_

#include <iosfwd>
#include <span>

#include "vbsr/config.hpp"
#include "vbsr/vb_engine.hpp"

namespace vbsr {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitNumerical = 3,
};

/// Reads cfg.input (HR PGM), draws Phi and the noise from cfg.seed, and
/// writes frame_00.pgm ... plus truth.txt into cfg.out. cfg.snr_db must hold
/// exactly one level. The draw equals bench trial 0 of the same image stem.
int cmd_degrade(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Reads cfg.frames LR frames frame_XX.pgm from the directory cfg.input,
/// runs the engine, and writes estimate.pgm, diagnostics.csv, and
/// registration.csv into cfg.out. With cfg.truth set, also reports PSNR
/// against it and against the bilinear baseline.
int cmd_sr(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Runs the trial grid over cfg.images and writes trials.csv and
/// summary.csv into cfg.out, then prints the summary table.
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

inline constexpr const char* kDiagnosticsCsvHeader =
    "t,mu_lambda,mu_rho,mu_kappa,mu_beta,x_residual,phi_residual_theta,phi_residual_ox,"
    "phi_residual_oy,phi_residual_gamma,free_energy";

void write_diagnostics_csv(std::ostream& os, std::span<const IterationRecord> records);

/// Maps the library's exception types onto exit codes, printing the message
/// to err. Returns fn()'s value when nothing is thrown.
int run_guarded(std::ostream& err, int (*fn)(const RunConfig&, std::ostream&, std::ostream&),
                const RunConfig& cfg, std::ostream& out);

}  // namespace vbsr

#endif  // VBSR_CLI_HPP_
