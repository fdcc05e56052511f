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

#include "vbsr/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace vbsr {

double byte_to_luminance(int v) { return v / 127.5 - 1.0; }

int luminance_to_byte(double v) {
  const double code = std::round((v + 1.0) * 127.5);
  if (std::isnan(code)) {
    return 0;
  }
  return static_cast<int>(std::clamp(code, 0.0, 255.0));
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string HeaderToken(std::istream& in) {
  std::string tok;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) {
        return tok;
      }
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int HeaderInt(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = HeaderToken(in);
  const auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), is_digit)) {
    throw IoError(path.string() + ": malformed PGM header");
  }
  return std::stoi(tok);
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  if (HeaderToken(in) != "P5") {
    throw IoError(path.string() + ": not a binary PGM (P5) file");
  }
  GrayImage img;
  img.width = HeaderInt(in, path);
  img.height = HeaderInt(in, path);
  const int maxval = HeaderInt(in, path);
  if (img.width < 1 || img.height < 1 || maxval != 255) {
    throw IoError(path.string() + ": only 8-bit PGM with positive size is supported");
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  img.pixels.resize(n);
  std::transform(raw.begin(), raw.end(), img.pixels.begin(),
                 [](unsigned char v) { return byte_to_luminance(v); });
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw IoError("write_pgm: image size does not match pixel count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<char> raw(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), raw.begin(),
                 [](double v) { return static_cast<char>(luminance_to_byte(v)); });
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

}  // namespace vbsr
