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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vbsr/evaluation.hpp"

namespace vbsr {
namespace {

HrImage Filled(int n, double v) { return HrImage{std::vector<double>(n, v)}; }

HrImage RandomImage(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HrImage x;
  x.pixels.resize(n);
  for (auto& v : x.pixels) {
    v = u(rng);
  }
  return x;
}

TEST(Psnr, Examples) {
  const HrImage x = Filled(16, 0.1);
  EXPECT_NEAR(psnr(Filled(16, 0.3), x), 20.0, 1e-12);
  EXPECT_NEAR(psnr(Filled(16, 1.1), x), 10.0 * std::log10(4.0), 1e-12);
  EXPECT_NEAR(psnr(Filled(16, 1.1), x), 6.0206, 1e-4);
  EXPECT_EQ(psnr(x, x), std::numeric_limits<double>::infinity());
  EXPECT_THROW(psnr(Filled(15, 0.0), x), std::invalid_argument);
}

TEST(Psnr, InvariantUnderJointPermutation) {
  std::mt19937_64 rng(1);
  const HrImage a = RandomImage(100, rng);
  const HrImage b = RandomImage(100, rng);
  std::vector<int> perm(100);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  HrImage pa;
  HrImage pb;
  for (int i : perm) {
    pa.pixels.push_back(a.pixels[i]);
    pb.pixels.push_back(b.pixels[i]);
  }
  EXPECT_NEAR(psnr(pa, pb), psnr(a, b), 1e-12);
}

TEST(Isnr, ExamplesAndIdentities) {
  const HrImage x = Filled(4, 0.0);
  EXPECT_NEAR(isnr(Filled(4, 0.1), Filled(4, 0.2), x), 10.0 * std::log10(4.0), 1e-12);
  EXPECT_EQ(isnr(Filled(4, 0.1), Filled(4, 0.1), x), 0.0);
  EXPECT_TRUE(std::isnan(isnr(x, Filled(4, 0.1), x)));
  EXPECT_TRUE(std::isnan(isnr(Filled(4, 0.1), x, x)));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const HrImage t = RandomImage(50, rng);
    const HrImage a = RandomImage(50, rng);
    const HrImage b = RandomImage(50, rng);
    const HrImage c = RandomImage(50, rng);
    EXPECT_NEAR(isnr(a, b, t), -isnr(b, a, t), 1e-12);
    EXPECT_NEAR(isnr(a, b, t) + isnr(b, c, t), isnr(a, c, t), 1e-12);
  }
}

TEST(BilinearUpscale, ConstantsIdentityAndRamps) {
  const ImageGeometry g4 = ImageGeometry::FromLr(5, 4, 4);
  for (double v : bilinear_upscale(std::vector<double>(20, 0.37), g4).pixels) {
    EXPECT_NEAR(v, 0.37, 1e-15);
  }

  std::mt19937_64 rng(3);
  const ImageGeometry g1 = ImageGeometry::FromLr(6, 5, 1);
  const HrImage y = RandomImage(30, rng);
  EXPECT_EQ(bilinear_upscale(y.pixels, g1).pixels, y.pixels);

  for (int alpha : {2, 3, 4}) {
    const ImageGeometry g = ImageGeometry::FromLr(6, 5, alpha);
    std::vector<double> ramp(30);
    auto affine = [](double u, double v) { return 0.1 + 0.05 * u - 0.08 * v; };
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 6; ++c) {
        ramp[r * 6 + c] = affine(c, r);
      }
    }
    const HrImage up = bilinear_upscale(ramp, g);
    for (int r = 0; r < g.hr_height; ++r) {
      for (int c = 0; c < g.hr_width; ++c) {
        const double u = std::clamp((c + 0.5) / alpha - 0.5, 0.0, 5.0);
        const double v = std::clamp((r + 0.5) / alpha - 0.5, 0.0, 4.0);
        EXPECT_NEAR(up.pixels[r * g.hr_width + c], affine(u, v), 1e-14);
      }
    }
  }
}

TEST(TrialSeeds, DeterministicAndDistinct) {
  const TrialSeeds a = trial_seeds(1, "camera", 30.0, 0);
  const TrialSeeds b = trial_seeds(1, "camera", 30.0, 0);
  EXPECT_EQ(a.registration, b.registration);
  EXPECT_EQ(a.noise, b.noise);
  EXPECT_NE(a.registration, a.noise);
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {1u, 2u}) {
    for (const char* id : {"camera", "clock"}) {
      for (double snr : {20.0, 30.0}) {
        for (int t = 0; t < 3; ++t) {
          const TrialSeeds s = trial_seeds(master, id, snr, t);
          seen.insert(s.registration);
          seen.insert(s.noise);
        }
      }
    }
  }
  EXPECT_EQ(seen.size(), 48u);
}

TrialRecord Record(const std::string& image, double snr, int trial, double p, double i,
                   bool converged) {
  TrialRecord r;
  r.image = image;
  r.snr_db = snr;
  r.trial = trial;
  r.psnr = p;
  r.psnr_bilinear = p - i;
  r.isnr_a = i;
  r.iterations = 17 + trial;
  r.converged = converged;
  r.wall_ms = 12.5 * (trial + 1);
  return r;
}

TEST(Aggregate, MeanSampleStdAndExclusions) {
  const std::vector<TrialRecord> trials{
      Record("a", 30, 0, 20.0, 3.0, true), Record("a", 30, 1, 22.0, 5.0, true),
      Record("a", 30, 2, 99.0, 9.0, false), Record("b", 20, 0, 18.0, 4.0, true),
      Record("a", 20, 0, 19.0, 2.0, false)};
  const auto rows = aggregate(trials);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].image, "a");
  EXPECT_EQ(rows[0].snr_db, 30.0);
  EXPECT_EQ(rows[0].trials, 2);
  EXPECT_EQ(rows[0].excluded, 1);
  EXPECT_DOUBLE_EQ(rows[0].psnr_mean, 21.0);
  EXPECT_DOUBLE_EQ(rows[0].psnr_std, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(rows[0].isnr_mean, 4.0);
  EXPECT_EQ(rows[1].image, "b");
  EXPECT_EQ(rows[1].psnr_std, 0.0);
  EXPECT_EQ(rows[2].trials, 0);
  EXPECT_EQ(rows[2].excluded, 1);
  EXPECT_TRUE(std::isnan(rows[2].psnr_mean));
}

TEST(TrialsCsv, RoundTripAndExactReaggregation) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  std::vector<TrialRecord> trials;
  for (const char* id : {"x", "y"}) {
    for (double snr : {20.0, 30.0}) {
      for (int t = 0; t < 7; ++t) {
        trials.push_back(Record(id, snr, t, 25.0 + n01(rng) / 3.0, 4.0 + n01(rng) / 7.0, t != 3));
      }
    }
  }
  trials[0].psnr = std::numeric_limits<double>::infinity();
  trials[0].isnr_a = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  write_trials_csv(out, trials);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kTrialCsvHeader);
  std::istringstream in(text);
  const auto back = read_trials_csv(in);
  ASSERT_EQ(back.size(), trials.size());
  for (std::size_t i = 1; i < trials.size(); ++i) {
    EXPECT_EQ(back[i].image, trials[i].image);
    EXPECT_EQ(back[i].snr_db, trials[i].snr_db);
    EXPECT_EQ(back[i].trial, trials[i].trial);
    EXPECT_EQ(back[i].psnr, trials[i].psnr);
    EXPECT_EQ(back[i].psnr_bilinear, trials[i].psnr_bilinear);
    EXPECT_EQ(back[i].isnr_a, trials[i].isnr_a);
    EXPECT_EQ(back[i].iterations, trials[i].iterations);
    EXPECT_EQ(back[i].converged, trials[i].converged);
    EXPECT_EQ(back[i].wall_ms, trials[i].wall_ms);
  }
  EXPECT_TRUE(std::isinf(back[0].psnr));
  EXPECT_TRUE(std::isnan(back[0].isnr_a));

  // Mean and n - 1 standard deviation straight from the parsed rows.
  trials.erase(trials.begin());
  std::ostringstream out2;
  write_trials_csv(out2, trials);
  std::istringstream in2(out2.str());
  const auto parsed = read_trials_csv(in2);
  const auto rows = aggregate(trials);
  for (const ResultRow& row : rows) {
    std::vector<double> p;
    std::vector<double> s;
    for (const auto& t : parsed) {
      if (t.image == row.image && t.snr_db == row.snr_db && t.converged) {
        p.push_back(t.psnr);
        s.push_back(t.isnr_a);
      }
    }
    auto mean = [](const std::vector<double>& v) {
      double sum = 0.0;
      for (double x : v) {
        sum += x;
      }
      return sum / static_cast<double>(v.size());
    };
    auto sd = [&](const std::vector<double>& v) {
      const double m = mean(v);
      double ss = 0.0;
      for (double x : v) {
        ss += (x - m) * (x - m);
      }
      return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    EXPECT_EQ(row.psnr_mean, mean(p));
    EXPECT_EQ(row.psnr_std, sd(p));
    EXPECT_EQ(row.isnr_mean, mean(s));
    EXPECT_EQ(row.isnr_std, sd(s));
    EXPECT_EQ(row.trials, static_cast<int>(p.size()));
  }
}

TEST(TrialsCsv, TimingColumnCanBeLeftEmpty) {
  const std::vector<TrialRecord> trials{Record("a", 30, 0, 20.0, 3.0, true)};
  std::ostringstream out;
  write_trials_csv(out, trials, false);
  const std::string text = out.str();
  const std::string row = text.substr(text.find('\n') + 1);
  EXPECT_EQ(row.back(), '\n');
  EXPECT_EQ(row[row.size() - 2], ',');
  std::istringstream in(text);
  EXPECT_EQ(read_trials_csv(in).size(), 1u);
}

TEST(TrialsCsv, RejectsBadInput) {
  std::istringstream wrong_header("a,b,c\n");
  EXPECT_THROW(read_trials_csv(wrong_header), std::invalid_argument);
  std::istringstream short_row(std::string(kTrialCsvHeader) + "\nx,30,0\n");
  EXPECT_THROW(read_trials_csv(short_row), std::invalid_argument);
}

TEST(SummaryCsv, HeaderAndRows) {
  const std::vector<TrialRecord> trials{Record("a", 30, 0, 20.0, 3.0, true),
                                        Record("a", 30, 1, 22.0, 5.0, true)};
  std::ostringstream out;
  write_summary_csv(out, aggregate(trials));
  std::istringstream in(out.str());
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, kSummaryCsvHeader);
  EXPECT_EQ(row, "a,30,2,0,21,1.4142135623730951,4,1.4142135623730951");
}

TEST(FormatReal, RoundTripsAndSpecialValues) {
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_real(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_real(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_real(30.0), "30");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
}

ExperimentSpec SmallSpec() {
  int w = 0;
  int h = 0;
  const HrImage full = testing::LoadImage("camera", &w, &h);
  HrImage crop;
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      crop.pixels.push_back(full.pixels[(14 + r) * w + 14 + c]);
    }
  }
  ExperimentSpec spec;
  spec.images = {TestImage{"crop", 12, 12, crop}};
  spec.snr_levels = {30.0, 40.0};
  spec.trials = 2;
  spec.frames = 3;
  spec.alpha = 2;
  spec.engine.max_iters = 6;
  spec.engine.compute_free_energy = false;
  return spec;
}

TEST(RunExperiment, GridOrderAndThreadIndependence) {
  ExperimentSpec spec = SmallSpec();
  int calls = 0;
  const ExperimentResult one = run_experiment(spec, [&](const TrialRecord&) { ++calls; });
  EXPECT_EQ(calls, 4);
  ASSERT_EQ(one.trials.size(), 4u);
  EXPECT_EQ(one.trials[0].snr_db, 30.0);
  EXPECT_EQ(one.trials[1].trial, 1);
  EXPECT_EQ(one.trials[2].snr_db, 40.0);
  EXPECT_EQ(one.rows.size(), 2u);
  spec.jobs = 3;
  const ExperimentResult three = run_experiment(spec);
  std::ostringstream a;
  std::ostringstream b;
  write_trials_csv(a, one.trials, false);
  write_trials_csv(b, three.trials, false);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunTrial, MatchesManualPipeline) {
  const ExperimentSpec spec = SmallSpec();
  RunResult engine;
  const TrialRecord rec = run_trial(spec.images[0], 30.0, 1, spec, &engine);
  const ImageGeometry g = ImageGeometry::FromHr(12, 12, 2);
  const TrialSeeds seeds = trial_seeds(spec.master_seed, "crop", 30.0, 1);
  const auto phis = sample_phi_prior(3, g, seeds.registration);
  const LrStack y =
      degrade(spec.images[0].image, phis, beta_from_snr(spec.images[0].image, phis, 30.0, g),
              seeds.noise, g);
  const RunResult direct = run(y, g, spec.engine);
  EXPECT_EQ(direct.estimate.pixels, engine.estimate.pixels);
  EXPECT_EQ(rec.psnr, psnr(direct.estimate, spec.images[0].image));
  EXPECT_EQ(rec.psnr_bilinear, psnr(bilinear_upscale(y.frames[0], g), spec.images[0].image));
  EXPECT_EQ(rec.isnr_a, rec.psnr - rec.psnr_bilinear);
  EXPECT_EQ(rec.iterations, direct.iterations);
  EXPECT_EQ(rec.converged, direct.converged);
  EXPECT_TRUE(rec.error.empty());
}

TEST(ExperimentSpec, Validation) {
  ExperimentSpec spec = SmallSpec();
  EXPECT_NO_THROW(spec.Validate());
  ExperimentSpec bad = spec;
  bad.trials = 0;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = spec;
  bad.alpha = 5;
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = spec;
  bad.snr_levels.clear();
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
  bad = spec;
  bad.images[0].id = "a,b";
  EXPECT_THROW(bad.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace vbsr
