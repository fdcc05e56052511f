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

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vbsr/cli.hpp"
#include "vbsr/config.hpp"
#include "vbsr/evaluation.hpp"
#include "vbsr/image_io.hpp"

namespace vbsr {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() /
              ("vbsr_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Lines(const fs::path& p) {
  std::istringstream in(ReadFile(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(line);
  }
  return out;
}

// Runs the installed binary and returns its exit status.
int RunCli(const std::string& args) {
  const std::string cmd = std::string(VBSR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Writes a 12x12 crop of a desk image for fast end-to-end runs.
fs::path WriteSmallImage(const fs::path& dir) {
  const GrayImage full = read_pgm(testing::DataPath("camera.pgm"));
  GrayImage crop{12, 12, {}};
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      crop.pixels.push_back(full.pixels[(14 + r) * full.width + 14 + c]);
    }
  }
  const fs::path p = dir / "small.pgm";
  write_pgm(p, crop);
  return p;
}

TEST(Config, ParsesKeysCommentsAndLists) {
  std::istringstream in(
      "# desk run\n"
      "alpha = 2\n"
      "\n"
      "snr_db = 20, 35.5  # two levels\n"
      "frames=7\n"
      "seed = 18446744073709551615\n"
      "max_iters = 40\n"
      "conv_tol = 1e-6\n"
      "images = a.pgm, b.pgm\n"
      "timing = false\n");
  const RunConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.alpha, 2);
  EXPECT_EQ(cfg.snr_db, (std::vector<double>{20.0, 35.5}));
  EXPECT_EQ(cfg.frames, 7);
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.engine.max_iters, 40);
  EXPECT_EQ(cfg.engine.conv_tol, 1e-6);
  EXPECT_EQ(cfg.images, (std::vector<std::string>{"a.pgm", "b.pgm"}));
  EXPECT_FALSE(cfg.timing);
  EXPECT_EQ(cfg.trials, 10);
}

TEST(Config, DefaultsMatchEngineConstants) {
  const RunConfig cfg;
  const EngineConfig engine;
  EXPECT_EQ(cfg.engine.max_iters, 500);
  EXPECT_EQ(cfg.engine.conv_tol, 1e-5);
  EXPECT_EQ(cfg.engine.sigma2_phi, engine.sigma2_phi);
  EXPECT_EQ(cfg.alpha, 4);
  EXPECT_EQ(cfg.frames, 10);
  EXPECT_EQ(cfg.snr_db, (std::vector<double>{20.0, 30.0, 40.0}));
  EXPECT_EQ(config_keys().size(), 15u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::istringstream unknown("alpha = 2\nlambda = 3\n");
  try {
    parse_config(unknown);
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream no_equals("alpha 2\n");
  EXPECT_THROW(parse_config(no_equals), ConfigError);
  RunConfig cfg;
  EXPECT_THROW(apply_config_value(cfg, "alpha", "two"), ConfigError);
  EXPECT_THROW(apply_config_value(cfg, "alpha", "2x"), ConfigError);
  EXPECT_THROW(apply_config_value(cfg, "timing", "maybe"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/vbsr.conf"), ConfigError);
  cfg.alpha = 0;
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg = RunConfig{};
  cfg.trials = 0;
  EXPECT_THROW(validate_config(cfg), ConfigError);
  EXPECT_NO_THROW(validate_config(RunConfig{}));
}

TEST(ImageIo, ByteMapping) {
  EXPECT_EQ(byte_to_luminance(0), -1.0);
  EXPECT_EQ(byte_to_luminance(255), 1.0);
  EXPECT_EQ(luminance_to_byte(-1.0), 0);
  EXPECT_EQ(luminance_to_byte(1.0), 255);
  EXPECT_EQ(luminance_to_byte(7.0), 255);
  EXPECT_EQ(luminance_to_byte(-3.0), 0);
  for (int v = 0; v < 256; ++v) {
    EXPECT_EQ(luminance_to_byte(byte_to_luminance(v)), v);
  }
}

TEST(ImageIo, RoundTripWithinQuantizationStep) {
  TempDir dir("pgm");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  GrayImage img{7, 5, {}};
  for (int i = 0; i < 35; ++i) {
    img.pixels.push_back(u(rng));
  }
  write_pgm(dir.path() / "a.pgm", img);
  const GrayImage back = read_pgm(dir.path() / "a.pgm");
  ASSERT_EQ(back.width, 7);
  ASSERT_EQ(back.height, 5);
  for (int i = 0; i < 35; ++i) {
    EXPECT_LE(std::abs(back.pixels[i] - std::clamp(img.pixels[i], -1.0, 1.0)), 1.0 / 127.5);
  }
}

TEST(ImageIo, HeaderCommentsAndErrors) {
  TempDir dir("pgm_err");
  {
    std::ofstream f(dir.path() / "c.pgm", std::ios::binary);
    f << "P5\n# made by hand\n2 1\n255\n";
    f.put(static_cast<char>(0));
    f.put(static_cast<char>(255));
  }
  const GrayImage c = read_pgm(dir.path() / "c.pgm");
  EXPECT_EQ(c.pixels, (std::vector<double>{-1.0, 1.0}));
  {
    std::ofstream f(dir.path() / "p2.pgm");
    f << "P2\n2 1\n255\n0 255\n";
  }
  EXPECT_THROW(read_pgm(dir.path() / "p2.pgm"), IoError);
  {
    std::ofstream f(dir.path() / "short.pgm", std::ios::binary);
    f << "P5\n4 4\n255\nab";
  }
  EXPECT_THROW(read_pgm(dir.path() / "short.pgm"), IoError);
  EXPECT_THROW(read_pgm(dir.path() / "missing.pgm"), IoError);
}

TEST(Diagnostics, CsvLayout) {
  IterationRecord r;
  r.t = 3;
  r.mu_lambda = 2.5;
  r.free_energy = -10.0;
  std::ostringstream out;
  const std::vector<IterationRecord> records{r};
  write_diagnostics_csv(out, records);
  std::istringstream in(out.str());
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, kDiagnosticsCsvHeader);
  EXPECT_EQ(row, "3,2.5,0,0,0,0,0,0,0,0,-10");
}

TEST(CmdDegrade, WritesFramesAndTruth) {
  TempDir dir("degrade");
  RunConfig cfg;
  cfg.input = testing::DataPath("camera.pgm");
  cfg.snr_db = {30.0};
  cfg.out = (dir.path() / "a").string();
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(run_guarded(err, cmd_degrade, cfg, out), kExitOk) << err.str();
  for (int l = 0; l < 10; ++l) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%02d.pgm", l);
    const GrayImage f = read_pgm(dir.path() / "a" / name);
    EXPECT_EQ(f.width, 10);
    EXPECT_EQ(f.height, 10);
  }
  EXPECT_FALSE(fs::exists(dir.path() / "a" / "frame_10.pgm"));
  const std::string truth = ReadFile(dir.path() / "a" / "truth.txt");
  for (const char* key : {"seed = 1", "beta = ", "snr_db = 30", "theta_9 = ", "gamma_0 = "}) {
    EXPECT_NE(truth.find(key), std::string::npos) << key;
  }

  cfg.out = (dir.path() / "b").string();
  ASSERT_EQ(run_guarded(err, cmd_degrade, cfg, out), kExitOk);
  cfg.seed = 2;
  cfg.out = (dir.path() / "c").string();
  ASSERT_EQ(run_guarded(err, cmd_degrade, cfg, out), kExitOk);
  EXPECT_EQ(ReadFile(dir.path() / "a" / "frame_03.pgm"),
            ReadFile(dir.path() / "b" / "frame_03.pgm"));
  EXPECT_EQ(ReadFile(dir.path() / "a" / "truth.txt"), ReadFile(dir.path() / "b" / "truth.txt"));
  EXPECT_NE(ReadFile(dir.path() / "a" / "frame_03.pgm"),
            ReadFile(dir.path() / "c" / "frame_03.pgm"));
}

TEST(CmdDegrade, ErrorExits) {
  TempDir dir("degrade_err");
  const std::string out = (dir.path() / "o").string();
  EXPECT_EQ(RunCli("degrade " + testing::DataPath("camera.pgm") + " --alpha 3 --snr-db 30 --out " +
                   out),
            kExitUsage);
  EXPECT_EQ(RunCli("degrade " + (dir.path() / "none.pgm").string() + " --snr-db 30 --out " + out),
            kExitIo);
  EXPECT_EQ(RunCli("degrade " + testing::DataPath("camera.pgm") + " --out " + out), kExitUsage);
  EXPECT_EQ(RunCli("degrade " + testing::DataPath("camera.pgm") + " --snr-db 30 --out " + out),
            kExitOk);
}

TEST(CmdSr, RoundTripBeatsBilinear) {
  TempDir dir("sr");
  const std::string camera = testing::DataPath("camera.pgm");
  const std::string frames = (dir.path() / "frames").string();
  const std::string est = (dir.path() / "est").string();
  ASSERT_EQ(RunCli("degrade " + camera + " --snr-db 30 --seed 5 --out " + frames), kExitOk);
  ASSERT_EQ(RunCli("sr " + frames + " --truth " + camera + " --out " + est), kExitOk);
  const GrayImage truth = read_pgm(camera);
  const GrayImage estimate = read_pgm(fs::path(est) / "estimate.pgm");
  ASSERT_EQ(estimate.width, 40);
  const GrayImage frame0 = read_pgm(fs::path(frames) / "frame_00.pgm");
  const ImageGeometry g = ImageGeometry::FromHr(40, 40, 4);
  const double p = psnr(HrImage{estimate.pixels}, HrImage{truth.pixels});
  const double pb = psnr(bilinear_upscale(frame0.pixels, g), HrImage{truth.pixels});
  RecordProperty("psnr", std::to_string(p));
  RecordProperty("psnr_bilinear", std::to_string(pb));
  EXPECT_GT(p, pb);
  const auto diag = Lines(fs::path(est) / "diagnostics.csv");
  ASSERT_GE(diag.size(), 2u);
  EXPECT_EQ(diag[0], kDiagnosticsCsvHeader);
  EXPECT_EQ(Lines(fs::path(est) / "registration.csv").size(), 11u);
  EXPECT_EQ(Lines(fs::path(est) / "status.txt")[0], "converged = true");
}

TEST(CmdSr, MaxItersOneRecordsOneSweep) {
  TempDir dir("sr_one");
  const std::string frames = (dir.path() / "frames").string();
  const std::string est = (dir.path() / "est").string();
  ASSERT_EQ(RunCli("degrade " + testing::DataPath("clock.pgm") +
                   " --snr-db 30 --frames 3 --out " + frames),
            kExitOk);
  EXPECT_EQ(RunCli("sr " + frames + " --frames 3 --max-iters 1 --out " + est), kExitOk);
  const auto diag = Lines(fs::path(est) / "diagnostics.csv");
  ASSERT_EQ(diag.size(), 2u);
  EXPECT_EQ(diag[1].substr(0, 2), "1,");
  EXPECT_EQ(Lines(fs::path(est) / "status.txt")[0], "converged = false");
}

TEST(CmdSr, MissingFrameIsIoError) {
  TempDir dir("sr_missing");
  const std::string frames = (dir.path() / "frames").string();
  ASSERT_EQ(RunCli("degrade " + testing::DataPath("clock.pgm") +
                   " --snr-db 30 --frames 3 --out " + frames),
            kExitOk);
  EXPECT_EQ(RunCli("sr " + frames + " --frames 4 --out " + (dir.path() / "est").string()),
            kExitIo);
  fs::remove(fs::path(frames) / "frame_01.pgm");
  EXPECT_EQ(RunCli("sr " + frames + " --frames 3 --out " + (dir.path() / "est").string()),
            kExitIo);
}

TEST(CmdBench, TwoTrialsOneSummaryRow) {
  TempDir dir("bench");
  const fs::path img = WriteSmallImage(dir.path());
  const std::string common = " --alpha 2 --frames 3 --snr-db 30 --trials 2 --no-timing ";
  ASSERT_EQ(RunCli("bench " + img.string() + common + "--out " + (dir.path() / "a").string()),
            kExitOk);
  const auto trials = Lines(dir.path() / "a" / "trials.csv");
  const auto summary = Lines(dir.path() / "a" / "summary.csv");
  ASSERT_EQ(trials.size(), 3u);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(trials[0], kTrialCsvHeader);
  EXPECT_EQ(summary[0], kSummaryCsvHeader);

  std::ifstream in(dir.path() / "a" / "trials.csv");
  const auto records = read_trials_csv(in);
  ASSERT_EQ(records.size(), 2u);
  ASSERT_TRUE(records[0].converged && records[1].converged);
  const auto rows = aggregate(records);
  EXPECT_EQ(rows[0].psnr_mean, (records[0].psnr + records[1].psnr) / 2.0);
  EXPECT_EQ(summary[1].substr(0, summary[1].find(',', summary[1].find(',') + 1)), "small,30");
  EXPECT_NE(summary[1].find(format_real(rows[0].psnr_mean)), std::string::npos);

  ASSERT_EQ(RunCli("bench " + img.string() + common + "--jobs 2 --out " +
                   (dir.path() / "b").string()),
            kExitOk);
  EXPECT_EQ(ReadFile(dir.path() / "a" / "trials.csv"), ReadFile(dir.path() / "b" / "trials.csv"));
}

TEST(Cli, UsageErrors) {
  TempDir dir("usage");
  EXPECT_EQ(RunCli("--help"), kExitOk);
  EXPECT_EQ(RunCli(""), kExitUsage);
  EXPECT_EQ(RunCli("frobnicate"), kExitUsage);
  EXPECT_EQ(RunCli("bench --alpha"), kExitUsage);
  const fs::path conf = dir.path() / "bad.conf";
  std::ofstream(conf) << "alpha = 4\nlambda = 1\n";
  EXPECT_EQ(RunCli("bench " + testing::DataPath("camera.pgm") + " --config " + conf.string()),
            kExitUsage);
  EXPECT_EQ(RunCli("bench " + testing::DataPath("camera.pgm") + " --trials 0"), kExitUsage);
  EXPECT_EQ(RunCli("bench --snr-db 30"), kExitUsage);
}

}  // namespace
}  // namespace vbsr
