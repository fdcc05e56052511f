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

#include "vbsr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vbsr {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Comma- or whitespace-separated items.
std::vector<std::string> SplitList(const std::string& s) {
  std::string normalized = s;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream is(normalized);
  std::vector<std::string> out;
  std::string item;
  while (is >> item) {
    out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  is.imbue(std::locale::classic());
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no") {
    return false;
  }
  throw ConfigError("bad boolean for " + key + ": '" + value + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "alpha", "hr_width", "hr_height", "frames", "snr_db", "trials", "seed",  "jobs",
      "max_iters", "conv_tol", "input", "images", "truth", "out", "timing"};
  return keys;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "alpha") {
    cfg.alpha = ParseNumber<int>(key, value);
  } else if (key == "hr_width") {
    cfg.hr_width = ParseNumber<int>(key, value);
  } else if (key == "hr_height") {
    cfg.hr_height = ParseNumber<int>(key, value);
  } else if (key == "frames") {
    cfg.frames = ParseNumber<int>(key, value);
  } else if (key == "snr_db") {
    cfg.snr_db.clear();
    for (const auto& item : SplitList(value)) {
      cfg.snr_db.push_back(ParseNumber<double>(key, item));
    }
  } else if (key == "trials") {
    cfg.trials = ParseNumber<int>(key, value);
  } else if (key == "seed") {
    cfg.seed = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "jobs") {
    cfg.jobs = ParseNumber<int>(key, value);
  } else if (key == "max_iters") {
    cfg.engine.max_iters = ParseNumber<int>(key, value);
  } else if (key == "conv_tol") {
    cfg.engine.conv_tol = ParseNumber<double>(key, value);
  } else if (key == "input") {
    cfg.input = value;
  } else if (key == "images") {
    cfg.images = SplitList(value);
  } else if (key == "truth") {
    cfg.truth = value;
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "timing") {
    cfg.timing = ParseBool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = Trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    try {
      apply_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(in, std::move(base));
}

void validate_config(const RunConfig& cfg) {
  if (cfg.alpha < 1) {
    throw ConfigError("alpha must be >= 1");
  }
  if (cfg.hr_width < 0 || cfg.hr_height < 0) {
    throw ConfigError("hr_width and hr_height must be >= 0");
  }
  if (cfg.frames < 1 || cfg.trials < 1 || cfg.jobs < 1) {
    throw ConfigError("frames, trials, and jobs must be >= 1");
  }
  if (cfg.engine.max_iters < 1 || !(cfg.engine.conv_tol > 0.0)) {
    throw ConfigError("max_iters must be >= 1 and conv_tol > 0");
  }
  if (cfg.snr_db.empty()) {
    throw ConfigError("snr_db needs at least one value");
  }
}

}  // namespace vbsr
