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

#ifndef VBSR_EVALUATION_HPP_
#define VBSR_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vbsr/core_types.hpp"
#include "vbsr/prior.hpp"
#include "vbsr/vb_engine.hpp"

namespace vbsr {

/// Peak range 2 (luminance in [-1, 1]). Returns +inf when xhat == x.
double psnr(const HrImage& xhat, const HrImage& x);

/// psnr(xhat, x) - psnr(xtilde, x); NaN if either PSNR is infinite.
double isnr(const HrImage& xhat, const HrImage& xtilde, const HrImage& x);

/// Bilinear interpolation of one LR frame onto the HR grid. HR pixel c maps
/// to LR coordinate (c + 0.5) / alpha - 0.5; samples beyond the outermost LR
/// centers are clamped to the edge.
HrImage bilinear_upscale(std::span<const double> y, const ImageGeometry& geom);

struct TestImage {
  std::string id;
  int width = 0;
  int height = 0;
  HrImage image;
};

struct ExperimentSpec {
  std::vector<TestImage> images;
  std::vector<double> snr_levels{20.0, 30.0, 40.0};
  int trials = 10;
  int frames = 10;
  int alpha = 4;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  EngineConfig engine;
  PriorConstants priors;

  /// Throws std::invalid_argument on empty grids, non-positive counts, or
  /// images that alpha does not divide.
  void Validate() const;
};

struct TrialRecord {
  std::string image;
  double snr_db = 0.0;
  int trial = 0;
  double psnr = 0.0;
  double psnr_bilinear = 0.0;
  double isnr_a = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  /// Empty unless the engine raised a numerical error.
  std::string error;
};

struct ResultRow {
  std::string image;
  double snr_db = 0.0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double isnr_mean = 0.0;
  double isnr_std = 0.0;
  /// Converged trials, the ones the statistics cover.
  int trials = 0;
  /// Trials that did not converge or failed.
  int excluded = 0;
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<ResultRow> rows;
};

struct TrialSeeds {
  std::uint64_t registration = 0;
  std::uint64_t noise = 0;
};

/// Independent substream seeds for one (image, snr, trial) cell.
TrialSeeds trial_seeds(std::uint64_t master_seed, const std::string& image_id, double snr_db,
                       int trial);

/// Draws Phi from the registration prior, sets beta from the SNR, degrades,
/// runs the engine, and scores against the truth and the bilinear baseline.
/// Numerical failures are recorded in the returned record.
TrialRecord run_trial(const TestImage& image, double snr_db, int trial,
                      const ExperimentSpec& spec, RunResult* engine_result = nullptr);

/// Mean and sample standard deviation (n - 1) per (image, snr) over the
/// converged trials, in first-appearance order.
std::vector<ResultRow> aggregate(std::span<const TrialRecord> trials);

using TrialCallback = std::function<void(const TrialRecord&)>;

/// Runs every (image, snr, trial) cell on spec.jobs threads. Records come
/// back in grid order regardless of scheduling.
ExperimentResult run_experiment(const ExperimentSpec& spec, const TrialCallback& on_trial = {});

inline constexpr const char* kTrialCsvHeader =
    "image,snr_db,trial,psnr,psnr_bilinear,isnr_a,iterations,converged,wall_ms";
inline constexpr const char* kSummaryCsvHeader =
    "image,snr_db,trials,excluded,psnr_mean,psnr_std,isnr_mean,isnr_std";

/// Reals are written with 17 significant digits so they parse back to the
/// same doubles. With include_timing false the wall_ms field is left empty.
void write_trials_csv(std::ostream& os, std::span<const TrialRecord> trials,
                      bool include_timing = true);
std::vector<TrialRecord> read_trials_csv(std::istream& is);
void write_summary_csv(std::ostream& os, std::span<const ResultRow> rows);

std::string format_real(double v);

}  // namespace vbsr

#endif  // VBSR_EVALUATION_HPP_
