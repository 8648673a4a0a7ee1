// Copyright (c) the SNE Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sne/errors.hpp"

namespace sne {

// H x W x C raster with intensities normalized to [0,1]. Interleaved
// channel-last storage.
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> pix;

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c = 1)
      : height(h), width(w), channels(c), pix(static_cast<size_t>(h) * w * c, 0.0) {}

  double& at(int y, int x, int c = 0) {
    return pix[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return pix[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool same_dims(const ImageBuffer& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Binary PGM (P5, 1 channel) and PPM (P6, 3 channels), 8-bit only.
ImageBuffer load_pnm(const std::string& path);
void save_pnm(const ImageBuffer& img, const std::string& path);
std::vector<uint8_t> encode_pnm(const ImageBuffer& img);
ImageBuffer decode_pnm(const std::vector<uint8_t>& bytes);

ImageBuffer extract_channel(const ImageBuffer& img, int channel);
double clamp01(double v);

}  // namespace sne
