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

#include "vbsr/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vbsr/observation.hpp"

namespace vbsr {

double psnr(const HrImage& xhat, const HrImage& x) {
  if (xhat.pixels.size() != x.pixels.size() || x.pixels.empty()) {
    throw std::invalid_argument("psnr: image sizes differ or are empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = xhat.pixels[i] - x.pixels[i];
    sum += d * d;
  }
  if (sum == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double mse = sum / static_cast<double>(x.pixels.size());
  return 10.0 * std::log10(4.0 / mse);
}

double isnr(const HrImage& xhat, const HrImage& xtilde, const HrImage& x) {
  const double a = psnr(xhat, x);
  const double b = psnr(xtilde, x);
  if (std::isinf(a) || std::isinf(b)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return a - b;
}

HrImage bilinear_upscale(std::span<const double> y, const ImageGeometry& geom) {
  geom.Validate();
  if (static_cast<int>(y.size()) != geom.n_y()) {
    throw std::invalid_argument("bilinear_upscale: frame size does not match geometry");
  }
  const int lw = geom.lr_width;
  const int lh = geom.lr_height;
  const double a = geom.alpha;
  // Index of the left/top sample and the weight of the right/bottom one.
  auto axis = [a](int hr, int lr_size, int& i0, int& i1, double& frac) {
    const double u = std::clamp((hr + 0.5) / a - 0.5, 0.0, lr_size - 1.0);
    i0 = std::min(static_cast<int>(u), lr_size - 1);
    i1 = std::min(i0 + 1, lr_size - 1);
    frac = u - i0;
  };
  HrImage out;
  out.pixels.resize(static_cast<std::size_t>(geom.n_x()));
  for (int r = 0; r < geom.hr_height; ++r) {
    int r0 = 0;
    int r1 = 0;
    double fr = 0.0;
    axis(r, lh, r0, r1, fr);
    for (int c = 0; c < geom.hr_width; ++c) {
      int c0 = 0;
      int c1 = 0;
      double fc = 0.0;
      axis(c, lw, c0, c1, fc);
      const double top = (1.0 - fc) * y[r0 * lw + c0] + fc * y[r0 * lw + c1];
      const double bottom = (1.0 - fc) * y[r1 * lw + c0] + fc * y[r1 * lw + c1];
      out.pixels[r * geom.hr_width + c] = (1.0 - fr) * top + fr * bottom;
    }
  }
  return out;
}

void ExperimentSpec::Validate() const {
  if (images.empty() || snr_levels.empty()) {
    throw std::invalid_argument("experiment needs at least one image and one SNR level");
  }
  if (trials < 1 || frames < 1 || alpha < 1 || jobs < 1) {
    throw std::invalid_argument("trials, frames, alpha, and jobs must be positive");
  }
  for (const auto& img : images) {
    if (img.id.empty() || img.id.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("image id must be non-empty and free of commas and newlines");
    }
    ImageGeometry::FromHr(img.width, img.height, alpha);
    if (static_cast<int>(img.image.pixels.size()) != img.width * img.height) {
      throw std::invalid_argument("image " + img.id + " has the wrong pixel count");
    }
  }
}

namespace {

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint32_t Lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t Hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

TrialSeeds trial_seeds(std::uint64_t master_seed, const std::string& image_id, double snr_db,
                       int trial) {
  const std::uint64_t id = Fnv1a(image_id);
  const auto snr = static_cast<std::uint64_t>(std::llround(snr_db * 1000.0));
  std::seed_seq seq{Lo(master_seed), Hi(master_seed), Lo(id),  Hi(id),
                    Lo(snr),         Hi(snr),         static_cast<std::uint32_t>(trial)};
  std::array<std::uint32_t, 4> words{};
  seq.generate(words.begin(), words.end());
  return {(std::uint64_t{words[0]} << 32) | words[1], (std::uint64_t{words[2]} << 32) | words[3]};
}

TrialRecord run_trial(const TestImage& image, double snr_db, int trial,
                      const ExperimentSpec& spec, RunResult* engine_result) {
  const ImageGeometry geom = ImageGeometry::FromHr(image.width, image.height, spec.alpha);
  const TrialSeeds seeds = trial_seeds(spec.master_seed, image.id, snr_db, trial);
  const std::vector<RegistrationParams> phis =
      sample_phi_prior(spec.frames, geom, seeds.registration);
  const double beta = beta_from_snr(image.image, phis, snr_db, geom);
  const LrStack y = degrade(image.image, phis, beta, seeds.noise, geom);

  TrialRecord rec;
  rec.image = image.id;
  rec.snr_db = snr_db;
  rec.trial = trial;
  const HrImage baseline = bilinear_upscale(y.frames.front(), geom);
  rec.psnr_bilinear = psnr(baseline, image.image);
  try {
    RunResult result = run(y, geom, spec.engine, spec.priors);
    rec.psnr = psnr(result.estimate, image.image);
    rec.isnr_a = rec.psnr - rec.psnr_bilinear;
    if (std::isinf(rec.psnr) || std::isinf(rec.psnr_bilinear)) {
      rec.isnr_a = std::numeric_limits<double>::quiet_NaN();
    }
    rec.iterations = result.iterations;
    rec.converged = result.converged;
    rec.wall_ms = result.wall_ms;
    if (engine_result != nullptr) {
      *engine_result = std::move(result);
    }
  } catch (const NumericalError& e) {
    rec.psnr = std::numeric_limits<double>::quiet_NaN();
    rec.isnr_a = std::numeric_limits<double>::quiet_NaN();
    rec.converged = false;
    rec.error = e.what();
  }
  return rec;
}

std::vector<ResultRow> aggregate(std::span<const TrialRecord> trials) {
  struct Cell {
    std::vector<double> psnr;
    std::vector<double> isnr;
    int excluded = 0;
  };
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, Cell> cells;
  for (const auto& t : trials) {
    const auto key = std::make_pair(t.image, t.snr_db);
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) {
      order.push_back(key);
    }
    if (t.converged && t.error.empty()) {
      it->second.psnr.push_back(t.psnr);
      it->second.isnr.push_back(t.isnr_a);
    } else {
      ++it->second.excluded;
    }
  }
  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (v.empty()) {
      mean = nan;
      sd = nan;
      return;
    }
    double sum = 0.0;
    for (double x : v) {
      sum += x;
    }
    mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) {
      sd = 0.0;
      return;
    }
    double ss = 0.0;
    for (double x : v) {
      ss += (x - mean) * (x - mean);
    }
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  };
  std::vector<ResultRow> rows;
  for (const auto& key : order) {
    const Cell& c = cells.at(key);
    ResultRow row;
    row.image = key.first;
    row.snr_db = key.second;
    row.trials = static_cast<int>(c.psnr.size());
    row.excluded = c.excluded;
    mean_std(c.psnr, row.psnr_mean, row.psnr_std);
    mean_std(c.isnr, row.isnr_mean, row.isnr_std);
    rows.push_back(row);
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const TrialCallback& on_trial) {
  spec.Validate();
  struct Cell {
    const TestImage* image;
    double snr;
    int trial;
  };
  std::vector<Cell> cells;
  for (const auto& img : spec.images) {
    for (double snr : spec.snr_levels) {
      for (int t = 0; t < spec.trials; ++t) {
        cells.push_back({&img, snr, t});
      }
    }
  }
  ExperimentResult out;
  out.trials.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        out.trials[i] = run_trial(*cells[i].image, cells[i].snr, cells[i].trial, spec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(callback_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next = cells.size();
        return;
      }
      if (on_trial) {
        std::lock_guard<std::mutex> lock(callback_mutex);
        on_trial(out.trials[i]);
      }
    }
  };
  const int threads = std::min<int>(spec.jobs, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < threads; ++j) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  out.rows = aggregate(out.trials);
  return out;
}

std::string format_real(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

void write_trials_csv(std::ostream& os, std::span<const TrialRecord> trials,
                      bool include_timing) {
  os << kTrialCsvHeader << '\n';
  for (const auto& t : trials) {
    os << t.image << ',' << format_real(t.snr_db) << ',' << t.trial << ',' << format_real(t.psnr)
       << ',' << format_real(t.psnr_bilinear) << ',' << format_real(t.isnr_a) << ','
       << t.iterations << ',' << (t.converged ? 1 : 0) << ','
       << (include_timing ? format_real(t.wall_ms) : std::string()) << '\n';
  }
}

namespace {

double ParseReal(const std::string& s) {
  if (s.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) {
    throw std::invalid_argument("bad number in CSV: " + s);
  }
  return v;
}

}  // namespace

std::vector<TrialRecord> read_trials_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTrialCsvHeader) {
    throw std::invalid_argument("trial CSV header mismatch");
  }
  std::vector<TrialRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
      f.emplace_back();
    }
    if (f.size() != 9) {
      throw std::invalid_argument("trial CSV row has " + std::to_string(f.size()) + " fields");
    }
    TrialRecord t;
    t.image = f[0];
    t.snr_db = ParseReal(f[1]);
    t.trial = std::stoi(f[2]);
    t.psnr = ParseReal(f[3]);
    t.psnr_bilinear = ParseReal(f[4]);
    t.isnr_a = ParseReal(f[5]);
    t.iterations = std::stoi(f[6]);
    t.converged = f[7] == "1";
    t.wall_ms = ParseReal(f[8]);
    out.push_back(t);
  }
  return out;
}

void write_summary_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.image << ',' << format_real(r.snr_db) << ',' << r.trials << ',' << r.excluded << ','
       << format_real(r.psnr_mean) << ',' << format_real(r.psnr_std) << ','
       << format_real(r.isnr_mean) << ',' << format_real(r.isnr_std) << '\n';
  }
}

}  // namespace vbsr
