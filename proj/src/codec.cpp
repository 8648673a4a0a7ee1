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

#include "sne/codec.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "sne/wire.hpp"

namespace sne {
namespace {

constexpr char kSneqMagic[5] = {'S', 'N', 'E', 'Q', '1'};

// Blocks are transformed in the classic level-shifted 8-bit domain the
// luminance table is calibrated for: intensity 0.5 maps to 0, full range to
// +-127.5.
constexpr double kPixelScale = 255.0;
constexpr double kLevelShift = 0.5;

// Standard JPEG luminance quantization table (Annex K).
constexpr int kLuminance8[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// Orthonormal DCT-II basis matrix for a given edge, cached per edge.
const Tensor2& dct_matrix(int edge) {
  static std::map<int, Tensor2> cache;
  auto it = cache.find(edge);
  if (it != cache.end()) return it->second;
  Tensor2 m(edge, edge);
  const double a0 = std::sqrt(1.0 / edge);
  const double ak = std::sqrt(2.0 / edge);
  for (int k = 0; k < edge; ++k) {
    for (int n = 0; n < edge; ++n) {
      m.at(k, n) = (k == 0 ? a0 : ak) * std::cos(M_PI * (2 * n + 1) * k / (2.0 * edge));
    }
  }
  return cache.emplace(edge, std::move(m)).first->second;
}

void require_square(const Tensor2& block, const char* op) {
  if (block.rows != block.cols) {
    throw ShapeError(std::string(op) + ": block must be square, got " + block.shape_str());
  }
}

int overlap_stride(int block_edge) { return block_edge / 2; }

}  // namespace

QuantTable QuantTable::luminance(int block_edge, double quality) {
  if (quality <= 0.0 || quality > 1.0) throw ParamError("quality must lie in (0, 1]");
  if (block_edge < 2) throw ParamError("block edge must be >= 2");
  // quality 0.5 reproduces the reference table; 1 degenerates to all ones.
  const double s = quality < 0.5 ? 0.5 / quality : 2.0 - 2.0 * quality;
  QuantTable t;
  t.block_edge = block_edge;
  t.quality = quality;
  t.entries.resize(static_cast<size_t>(block_edge) * block_edge);
  for (int r = 0; r < block_edge; ++r) {
    for (int c = 0; c < block_edge; ++c) {
      const int rr = std::min(7, r * 8 / block_edge);
      const int cc = std::min(7, c * 8 / block_edge);
      t.entries[static_cast<size_t>(r) * block_edge + c] =
          std::max(1.0, kLuminance8[rr * 8 + cc] * s);
    }
  }
  return t;
}

Tensor2 dct_forward(const Tensor2& block) {
  require_square(block, "dct_forward");
  const Tensor2& m = dct_matrix(block.rows);
  return matmul(matmul(m, block), transpose(m));
}

Tensor2 dct_inverse(const Tensor2& coeffs) {
  require_square(coeffs, "dct_inverse");
  const Tensor2& m = dct_matrix(coeffs.rows);
  return matmul(matmul(transpose(m), coeffs), m);
}

double coefficient_bound(int block_edge) { return block_edge * (kPixelScale * kLevelShift); }

std::vector<int16_t> quantize(const Tensor2& coeffs, const QuantTable& table) {
  if (coeffs.rows != table.block_edge || coeffs.cols != table.block_edge) {
    throw ShapeError("quantize: coeffs " + coeffs.shape_str() + " do not match table edge");
  }
  std::vector<int16_t> out(coeffs.size());
  for (size_t i = 0; i < coeffs.size(); ++i) {
    const double q = std::round(coeffs.data[i] / table.entries[i]);
    out[i] = static_cast<int16_t>(std::max(-32768.0, std::min(32767.0, q)));
  }
  return out;
}

Tensor2 dequantize(const int16_t* block, const QuantTable& table) {
  Tensor2 out(table.block_edge, table.block_edge);
  for (size_t i = 0; i < out.size(); ++i) {
    out.data[i] = static_cast<double>(block[i]) * table.entries[i];
  }
  return out;
}

int grid_extent(int image_extent, int block_edge, PatchMode mode) {
  if (mode == PatchMode::Aligned) {
    if (image_extent % block_edge != 0) {
      throw GeometryError("aligned mode needs dimensions divisible by block edge " +
                          std::to_string(block_edge) + ", got " + std::to_string(image_extent));
    }
    return image_extent / block_edge;
  }
  const int stride = overlap_stride(block_edge);
  if (image_extent < block_edge || (image_extent - block_edge) % stride != 0) {
    throw GeometryError("overlapping mode needs (extent - edge) divisible by " +
                        std::to_string(stride) + ", got extent " + std::to_string(image_extent));
  }
  return (image_extent - block_edge) / stride + 1;
}

int patch_origin(int index, int block_edge, PatchMode mode) {
  return mode == PatchMode::Aligned ? index * block_edge : index * overlap_stride(block_edge);
}

QuantizedRepresentation encode_image(const ImageBuffer& img, const QuantTable& table,
                                     PatchMode mode) {
  const int edge = table.block_edge;
  QuantizedRepresentation rep;
  rep.height = img.height;
  rep.width = img.width;
  rep.channels = img.channels;
  rep.mode = mode;
  rep.table = table;
  rep.grid_rows = grid_extent(img.height, edge, mode);
  rep.grid_cols = grid_extent(img.width, edge, mode);
  const size_t e2 = static_cast<size_t>(edge) * edge;
  rep.coeffs.resize(static_cast<size_t>(img.channels) * rep.blocks_per_channel() * e2);

  Tensor2 block(edge, edge);
  for (int ch = 0; ch < img.channels; ++ch) {
    for (int gr = 0; gr < rep.grid_rows; ++gr) {
      for (int gc = 0; gc < rep.grid_cols; ++gc) {
        const int y0 = patch_origin(gr, edge, mode);
        const int x0 = patch_origin(gc, edge, mode);
        for (int y = 0; y < edge; ++y)
          for (int x = 0; x < edge; ++x)
            block.at(y, x) = (img.at(y0 + y, x0 + x, ch) - kLevelShift) * kPixelScale;
        const std::vector<int16_t> q = quantize(dct_forward(block), table);
        std::copy(q.begin(), q.end(), rep.block(ch, gr * rep.grid_cols + gc));
      }
    }
  }

  // Zeroth-order entropy per coefficient band, averaged over bands. A
  // constant image therefore estimates to exactly zero.
  const int blocks = rep.blocks_per_channel() * img.channels;
  double bits_per_coeff_sum = 0.0;
  std::map<int16_t, int> hist;
  for (size_t pos = 0; pos < e2; ++pos) {
    hist.clear();
    for (int ch = 0; ch < img.channels; ++ch) {
      for (int b = 0; b < rep.blocks_per_channel(); ++b) {
        ++hist[rep.block(ch, b)[pos]];
      }
    }
    double h = 0.0;
    for (const auto& [sym, count] : hist) {
      const double p = static_cast<double>(count) / blocks;
      h -= p * std::log2(p);
    }
    bits_per_coeff_sum += h;
  }
  const double bits_per_coeff = bits_per_coeff_sum / static_cast<double>(e2);
  const double coeffs_per_pixel = static_cast<double>(rep.blocks_per_channel()) * e2 /
                                  (static_cast<double>(img.height) * img.width);
  rep.bpp_estimate = bits_per_coeff * coeffs_per_pixel;
  return rep;
}

ImageBuffer baseline_decode(const QuantizedRepresentation& rep) {
  const int edge = rep.table.block_edge;
  ImageBuffer out(rep.height, rep.width, rep.channels);

  // Same geometry for every channel, so per-pixel contribution counts are
  // computed once.
  std::vector<double> weight(static_cast<size_t>(rep.height) * rep.width, 0.0);
  for (int gr = 0; gr < rep.grid_rows; ++gr) {
    for (int gc = 0; gc < rep.grid_cols; ++gc) {
      const int y0 = patch_origin(gr, edge, rep.mode);
      const int x0 = patch_origin(gc, edge, rep.mode);
      for (int y = 0; y < edge; ++y)
        for (int x = 0; x < edge; ++x) weight[static_cast<size_t>(y0 + y) * rep.width + x0 + x] += 1.0;
    }
  }

  for (int ch = 0; ch < rep.channels; ++ch) {
    for (int gr = 0; gr < rep.grid_rows; ++gr) {
      for (int gc = 0; gc < rep.grid_cols; ++gc) {
        const Tensor2 pixels =
            dct_inverse(dequantize(rep.block(ch, gr * rep.grid_cols + gc), rep.table));
        const int y0 = patch_origin(gr, edge, rep.mode);
        const int x0 = patch_origin(gc, edge, rep.mode);
        for (int y = 0; y < edge; ++y) {
          for (int x = 0; x < edge; ++x) {
            out.at(y0 + y, x0 + x, ch) += pixels.at(y, x) / kPixelScale + kLevelShift;
          }
        }
      }
    }
  }
  for (int ch = 0; ch < rep.channels; ++ch) {
    for (int y = 0; y < rep.height; ++y) {
      for (int x = 0; x < rep.width; ++x) {
        const double w = weight[static_cast<size_t>(y) * rep.width + x];
        out.at(y, x, ch) = clamp01(w > 0.0 ? out.at(y, x, ch) / w : 0.0);
      }
    }
  }
  return out;
}

std::vector<uint8_t> encode_sneq(const QuantizedRepresentation& rep) {
  std::vector<uint8_t> out;
  wire::put_bytes(out, kSneqMagic, 5);
  wire::put_u32(out, 1);  // version
  wire::put_u32(out, static_cast<uint32_t>(rep.height));
  wire::put_u32(out, static_cast<uint32_t>(rep.width));
  wire::put_u32(out, static_cast<uint32_t>(rep.channels));
  wire::put_u32(out, static_cast<uint32_t>(rep.table.block_edge));
  out.push_back(static_cast<uint8_t>(rep.mode));
  wire::put_f64(out, rep.table.quality);
  wire::put_f64(out, rep.bpp_estimate);
  for (double e : rep.table.entries) wire::put_f64(out, e);
  wire::put_u32(out, static_cast<uint32_t>(rep.grid_rows));
  wire::put_u32(out, static_cast<uint32_t>(rep.grid_cols));
  for (int16_t c : rep.coeffs) wire::put_i16(out, c);
  return out;
}

QuantizedRepresentation decode_sneq(const std::vector<uint8_t>& bytes) {
  wire::Reader r{bytes};
  if (r.str(5) != std::string(kSneqMagic, 5)) throw IoError("bad SNEQ magic");
  if (r.u32() != 1) throw IoError("unsupported SNEQ version");
  QuantizedRepresentation rep;
  rep.height = static_cast<int>(r.u32());
  rep.width = static_cast<int>(r.u32());
  rep.channels = static_cast<int>(r.u32());
  rep.table.block_edge = static_cast<int>(r.u32());
  rep.mode = static_cast<PatchMode>(r.u8());
  rep.table.quality = r.f64();
  rep.bpp_estimate = r.f64();
  const size_t e2 = static_cast<size_t>(rep.table.block_edge) * rep.table.block_edge;
  rep.table.entries.resize(e2);
  for (double& e : rep.table.entries) e = r.f64();
  rep.grid_rows = static_cast<int>(r.u32());
  rep.grid_cols = static_cast<int>(r.u32());
  rep.coeffs.resize(static_cast<size_t>(rep.channels) * rep.blocks_per_channel() * e2);
  for (int16_t& c : rep.coeffs) c = r.i16();
  return rep;
}

void save_sneq(const QuantizedRepresentation& rep, const std::string& path) {
  wire::write_file(path, encode_sneq(rep));
}

QuantizedRepresentation load_sneq(const std::string& path) {
  return decode_sneq(wire::read_file(path));
}

namespace wire {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

}  // namespace wire

}  // namespace sne
