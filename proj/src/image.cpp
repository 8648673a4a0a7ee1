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

#include "sne/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace sne {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

namespace {

// Skips PNM whitespace and '#' comments, then parses a non-negative integer.
int parse_pnm_int(const std::vector<uint8_t>& bytes, size_t& pos) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !isdigit(bytes[pos])) throw IoError("malformed PNM header");
  long v = 0;
  while (pos < bytes.size() && isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    if (v > 1 << 30) throw IoError("PNM header value out of range");
    ++pos;
  }
  return static_cast<int>(v);
}

}  // namespace

ImageBuffer decode_pnm(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw IoError("not a PNM file");
  int channels;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw IoError("unsupported PNM variant (only binary P5/P6)");
  }
  size_t pos = 2;
  const int width = parse_pnm_int(bytes, pos);
  const int height = parse_pnm_int(bytes, pos);
  const int maxval = parse_pnm_int(bytes, pos);
  if (maxval <= 0 || maxval > 255) throw IoError("only 8-bit PNM supported");
  ++pos;  // single whitespace byte after maxval
  const size_t need = static_cast<size_t>(width) * height * channels;
  if (bytes.size() - pos < need) throw IoError("PNM pixel data truncated");

  ImageBuffer img(height, width, channels);
  for (size_t i = 0; i < need; ++i) {
    img.pix[i] = static_cast<double>(bytes[pos + i]) / maxval;
  }
  return img;
}

std::vector<uint8_t> encode_pnm(const ImageBuffer& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw IoError("PNM supports 1 or 3 channels only");
  }
  char header[64];
  std::snprintf(header, sizeof(header), "P%c\n%d %d\n255\n", img.channels == 1 ? '5' : '6',
                img.width, img.height);
  std::vector<uint8_t> out(header, header + std::char_traits<char>::length(header));
  out.reserve(out.size() + img.pix.size());
  for (double v : img.pix) {
    out.push_back(static_cast<uint8_t>(std::lround(clamp01(v) * 255.0)));
  }
  return out;
}

ImageBuffer load_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

void save_pnm(const ImageBuffer& img, const std::string& path) {
  const std::vector<uint8_t> bytes = encode_pnm(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

ImageBuffer extract_channel(const ImageBuffer& img, int channel) {
  ImageBuffer out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, x, channel);
  return out;
}

}  // namespace sne
