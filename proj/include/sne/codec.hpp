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

#include "sne/image.hpp"
#include "sne/tensor.hpp"

namespace sne {

enum class PatchMode : uint8_t { Aligned = 0, Overlapping = 1 };

// Per-block divisor table. Entries never fall below 1, so quantized
// coefficients of a [0,1] image always fit in 16 bits.
struct QuantTable {
  int block_edge = 8;
  double quality = 1.0;
  std::vector<double> entries;  // block_edge^2, row-major

  // Luminance-style table resampled to `block_edge` and scaled by quality in
  // (0,1]; quality 1 gives an all-ones table (rounding only).
  static QuantTable luminance(int block_edge, double quality);

  double entry(int r, int c) const { return entries[static_cast<size_t>(r) * block_edge + c]; }
};

// Quantized transform coefficients for every patch of one image, the input
// the estimators decode from.
struct QuantizedRepresentation {
  int height = 0;
  int width = 0;
  int channels = 1;
  PatchMode mode = PatchMode::Aligned;
  QuantTable table;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<int16_t> coeffs;  // [channel][block row-major][edge^2]
  double bpp_estimate = 0.0;

  int blocks_per_channel() const { return grid_rows * grid_cols; }
  const int16_t* block(int channel, int index) const {
    const size_t e2 = static_cast<size_t>(table.block_edge) * table.block_edge;
    return &coeffs[(static_cast<size_t>(channel) * blocks_per_channel() + index) * e2];
  }
  int16_t* block(int channel, int index) {
    const size_t e2 = static_cast<size_t>(table.block_edge) * table.block_edge;
    return &coeffs[(static_cast<size_t>(channel) * blocks_per_channel() + index) * e2];
  }
};

// Orthonormal type-II DCT of a square block (and its inverse). Energy is
// preserved to roundoff.
Tensor2 dct_forward(const Tensor2& block);
Tensor2 dct_inverse(const Tensor2& coeffs);

// Largest coefficient magnitude a level-shifted [0,1] block can produce;
// dequantized coefficients divided by this land in [-1, 1].
double coefficient_bound(int block_edge);

// Round-half-away-from-zero of coeffs/table, entrywise.
std::vector<int16_t> quantize(const Tensor2& coeffs, const QuantTable& table);
Tensor2 dequantize(const int16_t* block, const QuantTable& table);

// Number of patches along one image dimension. Aligned mode requires the
// extent to divide evenly; overlapping mode slides by block_edge/2.
int grid_extent(int image_extent, int block_edge, PatchMode mode);
// Pixel origin of the i-th patch along one dimension.
int patch_origin(int index, int block_edge, PatchMode mode);

QuantizedRepresentation encode_image(const ImageBuffer& img, const QuantTable& table,
                                     PatchMode mode);
// Dequantize + inverse DCT + clamp; overlapping contributions are averaged
// per pixel. The non-learned reference decoder.
ImageBuffer baseline_decode(const QuantizedRepresentation& rep);

// SNEQ1 container (little-endian).
void save_sneq(const QuantizedRepresentation& rep, const std::string& path);
QuantizedRepresentation load_sneq(const std::string& path);
std::vector<uint8_t> encode_sneq(const QuantizedRepresentation& rep);
QuantizedRepresentation decode_sneq(const std::vector<uint8_t>& bytes);

}  // namespace sne
