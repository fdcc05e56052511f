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

#ifndef VBSR_CONFIG_HPP_
#define VBSR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbsr/vb_engine.hpp"

namespace vbsr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings shared by the CLI subcommands. Defaults follow EngineConfig and
/// the desk protocol (alpha 4, 10 frames, SNR grid 20/30/40 dB, 10 trials).
struct RunConfig {
  int alpha = 4;
  /// 0 means "take from the input image".
  int hr_width = 0;
  int hr_height = 0;
  int frames = 10;
  std::vector<double> snr_db{20.0, 30.0, 40.0};
  int trials = 10;
  std::uint64_t seed = 1;
  int jobs = 1;
  EngineConfig engine;
  std::string input;
  std::vector<std::string> images;
  std::string truth;
  std::string out = ".";
  bool timing = true;
};

/// Recognized keys, in the order the README documents them.
const std::vector<std::string>& config_keys();

/// Sets one key from its text value. Throws ConfigError on unknown keys or
/// malformed values.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Entries override the values in base.
RunConfig parse_config(std::istream& in, RunConfig base = {});
/// Throws ConfigError if the file cannot be read.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Throws ConfigError on out-of-range values.
void validate_config(const RunConfig& cfg);

}  // namespace vbsr

#endif  // VBSR_CONFIG_HPP_
