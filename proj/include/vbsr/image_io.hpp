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

#ifndef VBSR_IMAGE_IO_HPP_
#define VBSR_IMAGE_IO_HPP_

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace vbsr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grayscale raster in luminance units (-1 black, +1 white), row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
};

/// 8-bit code v to luminance v / 127.5 - 1.
double byte_to_luminance(int v);
/// round((v + 1) * 127.5) clamped to [0, 255].
int luminance_to_byte(double v);

/// Reads binary PGM (P5) with maxval 255. Throws IoError.
GrayImage read_pgm(const std::filesystem::path& path);
/// Writes binary PGM (P5), clamping luminance to [-1, 1]. Throws IoError.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace vbsr

#endif  // VBSR_IMAGE_IO_HPP_
