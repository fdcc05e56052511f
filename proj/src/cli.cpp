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

#include "vbsr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "vbsr/evaluation.hpp"
#include "vbsr/image_io.hpp"
#include "vbsr/observation.hpp"

namespace vbsr {

namespace fs = std::filesystem;

namespace {

std::string FrameName(int l) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%02d.pgm", l);
  return buf;
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw IoError("cannot write " + path.string());
  }
  return os;
}

void CheckHrSize(const RunConfig& cfg, int width, int height) {
  if ((cfg.hr_width != 0 && cfg.hr_width != width) ||
      (cfg.hr_height != 0 && cfg.hr_height != height)) {
    throw ConfigError("HR size in the config does not match the image");
  }
}

TestImage LoadTestImage(const std::string& path) {
  GrayImage g = read_pgm(path);
  return {fs::path(path).stem().string(), g.width, g.height, HrImage{std::move(g.pixels)}};
}

}  // namespace

void write_diagnostics_csv(std::ostream& os, std::span<const IterationRecord> records) {
  os << kDiagnosticsCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.t << ',' << format_real(r.mu_lambda) << ',' << format_real(r.mu_rho) << ','
       << format_real(r.mu_kappa) << ',' << format_real(r.mu_beta) << ','
       << format_real(r.x_residual);
    for (double p : r.phi_residual) {
      os << ',' << format_real(p);
    }
    os << ',' << format_real(r.free_energy) << '\n';
  }
}

int cmd_degrade(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  validate_config(cfg);
  if (cfg.input.empty()) {
    throw ConfigError("degrade needs an input HR image");
  }
  if (cfg.snr_db.size() != 1) {
    throw ConfigError("degrade takes exactly one SNR level");
  }
  const TestImage img = LoadTestImage(cfg.input);
  CheckHrSize(cfg, img.width, img.height);
  const ImageGeometry geom = ImageGeometry::FromHr(img.width, img.height, cfg.alpha);
  const double snr = cfg.snr_db.front();
  const TrialSeeds seeds = trial_seeds(cfg.seed, img.id, snr, 0);
  const auto phis = sample_phi_prior(cfg.frames, geom, seeds.registration);
  const double beta = beta_from_snr(img.image, phis, snr, geom);
  const LrStack y = degrade(img.image, phis, beta, seeds.noise, geom);

  const fs::path dir(cfg.out);
  EnsureDir(dir);
  for (int l = 0; l < cfg.frames; ++l) {
    write_pgm(dir / FrameName(l), GrayImage{geom.lr_width, geom.lr_height, y.frames[l]});
  }
  std::ofstream truth = OpenOut(dir / "truth.txt");
  truth << "seed = " << cfg.seed << '\n'
        << "snr_db = " << format_real(snr) << '\n'
        << "beta = " << format_real(beta) << '\n'
        << "alpha = " << cfg.alpha << '\n'
        << "hr_width = " << geom.hr_width << '\n'
        << "hr_height = " << geom.hr_height << '\n'
        << "frames = " << cfg.frames << '\n';
  for (int l = 0; l < cfg.frames; ++l) {
    truth << "theta_" << l << " = " << format_real(phis[l].theta) << '\n'
          << "o_x_" << l << " = " << format_real(phis[l].o_x) << '\n'
          << "o_y_" << l << " = " << format_real(phis[l].o_y) << '\n'
          << "gamma_" << l << " = " << format_real(phis[l].gamma) << '\n';
  }
  if (!truth) {
    throw IoError("failed writing truth.txt");
  }
  out << "wrote " << cfg.frames << " frames of " << geom.lr_width << "x" << geom.lr_height
      << " to " << dir.string() << " (beta " << format_real(beta) << ")\n";
  return kExitOk;
}

int cmd_sr(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate_config(cfg);
  if (cfg.input.empty()) {
    throw ConfigError("sr needs the directory holding the LR frames");
  }
  const fs::path in_dir(cfg.input);
  LrStack y;
  int lr_w = 0;
  int lr_h = 0;
  for (int l = 0; l < cfg.frames; ++l) {
    GrayImage g = read_pgm(in_dir / FrameName(l));
    if (l == 0) {
      lr_w = g.width;
      lr_h = g.height;
    } else if (g.width != lr_w || g.height != lr_h) {
      throw IoError(FrameName(l) + " differs in size from frame_00.pgm");
    }
    y.frames.push_back(std::move(g.pixels));
  }
  const ImageGeometry geom = ImageGeometry::FromLr(lr_w, lr_h, cfg.alpha);
  CheckHrSize(cfg, geom.hr_width, geom.hr_height);

  const RunResult result = run(y, geom, cfg.engine);

  const fs::path dir(cfg.out);
  EnsureDir(dir);
  write_pgm(dir / "estimate.pgm", GrayImage{geom.hr_width, geom.hr_height, result.estimate.pixels});
  {
    std::ofstream diag = OpenOut(dir / "diagnostics.csv");
    write_diagnostics_csv(diag, result.diagnostics);
  }
  {
    std::ofstream reg = OpenOut(dir / "registration.csv");
    reg << "frame,theta,o_x,o_y,gamma,var_theta,var_o_x,var_o_y,var_gamma\n";
    for (std::size_t l = 0; l < result.final_state.q_phi.size(); ++l) {
      const auto& q = result.final_state.q_phi[l];
      reg << l;
      for (int k = 0; k < 4; ++k) {
        reg << ',' << format_real(q.mu[k]);
      }
      for (int k = 0; k < 4; ++k) {
        reg << ',' << format_real(q.sigma(k, k));
      }
      reg << '\n';
    }
  }
  {
    std::ofstream status = OpenOut(dir / "status.txt");
    status << "converged = " << (result.converged ? "true" : "false") << '\n'
           << "iterations = " << result.iterations << '\n'
           << "wall_ms = " << format_real(result.wall_ms) << '\n';
  }
  out << (result.converged ? "converged" : "stopped") << " after " << result.iterations
      << " sweeps in " << std::fixed << std::setprecision(1) << result.wall_ms / 1000.0
      << " s\n";
  if (!result.converged) {
    err << "warning: no convergence within " << cfg.engine.max_iters << " sweeps\n";
  }
  if (!cfg.truth.empty()) {
    const GrayImage truth = read_pgm(cfg.truth);
    if (truth.width != geom.hr_width || truth.height != geom.hr_height) {
      throw IoError("truth image size does not match the HR grid");
    }
    const HrImage x{truth.pixels};
    const double p = psnr(result.estimate, x);
    const double pb = psnr(bilinear_upscale(y.frames.front(), geom), x);
    out << std::setprecision(2) << "PSNR " << p << " dB, bilinear " << pb << " dB, ISNR "
        << p - pb << " dB\n";
  }
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate_config(cfg);
  std::vector<std::string> paths = cfg.images;
  if (paths.empty() && !cfg.input.empty()) {
    paths.push_back(cfg.input);
  }
  if (paths.empty()) {
    throw ConfigError("bench needs at least one image");
  }
  ExperimentSpec spec;
  for (const auto& p : paths) {
    spec.images.push_back(LoadTestImage(p));
    CheckHrSize(cfg, spec.images.back().width, spec.images.back().height);
  }
  spec.snr_levels = cfg.snr_db;
  spec.trials = cfg.trials;
  spec.frames = cfg.frames;
  spec.alpha = cfg.alpha;
  spec.master_seed = cfg.seed;
  spec.jobs = cfg.jobs;
  spec.engine = cfg.engine;
  spec.engine.compute_free_energy = false;

  const fs::path dir(cfg.out);
  EnsureDir(dir);
  const ExperimentResult result = run_experiment(spec, [&err](const TrialRecord& t) {
    err << t.image << " snr " << t.snr_db << " trial " << t.trial << ": psnr "
        << format_real(std::round(t.psnr * 100.0) / 100.0) << " isnr "
        << format_real(std::round(t.isnr_a * 100.0) / 100.0) << " iters " << t.iterations
        << (t.converged ? "" : " (not converged)") << (t.error.empty() ? "" : " " + t.error)
        << '\n';
  });
  {
    std::ofstream os = OpenOut(dir / "trials.csv");
    write_trials_csv(os, result.trials, cfg.timing);
  }
  {
    std::ofstream os = OpenOut(dir / "summary.csv");
    write_summary_csv(os, result.rows);
  }
  out << std::left << std::setw(12) << "image" << std::right << std::setw(8) << "SNR"
      << std::setw(18) << "PSNR" << std::setw(18) << "ISNR(a)" << std::setw(8) << "n"
      << std::setw(10) << "excluded" << '\n';
  for (const auto& r : result.rows) {
    std::ostringstream p;
    std::ostringstream i;
    p << std::fixed << std::setprecision(2) << r.psnr_mean << " +- " << r.psnr_std;
    i << std::fixed << std::setprecision(2) << r.isnr_mean << " +- " << r.isnr_std;
    out << std::left << std::setw(12) << r.image << std::right << std::setw(8) << r.snr_db
        << std::setw(18) << p.str() << std::setw(18) << i.str() << std::setw(8) << r.trials
        << std::setw(10) << r.excluded << '\n';
  }
  if (cfg.timing) {
    double total = 0.0;
    for (const auto& t : result.trials) {
      total += t.wall_ms;
    }
    out << "mean wall time per trial: " << std::fixed << std::setprecision(1)
        << total / 1000.0 / static_cast<double>(result.trials.size()) << " s\n";
  }
  return kExitOk;
}

int run_guarded(std::ostream& err, int (*fn)(const RunConfig&, std::ostream&, std::ostream&),
                const RunConfig& cfg, std::ostream& out) {
  try {
    return fn(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace vbsr
