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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sne/codec.hpp"
#include "sne/metrics.hpp"
#include "sne/rng.hpp"
#include "support/corpus.hpp"

using namespace sne;

TEST_CASE("constant block concentrates into the DC coefficient") {
  const double v = 0.37;
  const Tensor2 block = Tensor2::full(8, 8, v);
  const Tensor2 coeffs = dct_forward(block);
  CHECK(coeffs.at(0, 0) == doctest::Approx(v * 8.0).epsilon(1e-12));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (r != 0 || c != 0) CHECK(std::fabs(coeffs.at(r, c)) < 1e-12);
}

TEST_CASE("dct round trip and Parseval") {
  RngStream rng(17);
  const Tensor2 x = rng.uniform_tensor(8, 8, 0.0, 1.0);
  const Tensor2 coeffs = dct_forward(x);
  const Tensor2 back = dct_inverse(coeffs);
  double norm_x = 0.0, norm_c = 0.0, err = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    norm_x += x.data[i] * x.data[i];
    norm_c += coeffs.data[i] * coeffs.data[i];
    err = std::max(err, std::fabs(back.data[i] - x.data[i]));
  }
  CHECK(err < 1e-9);
  CHECK(std::fabs(std::sqrt(norm_x) - std::sqrt(norm_c)) < 1e-9);
}

TEST_CASE("dct rejects non-square blocks") {
  CHECK_THROWS_AS(dct_forward(Tensor2(4, 8)), ShapeError);
}

TEST_CASE("quantize rounds half away from zero") {
  QuantTable unit;
  unit.block_edge = 2;
  unit.quality = 1.0;
  unit.entries = {1.0, 1.0, 1.0, 1.0};
  const Tensor2 coeffs(2, 2, {1.4, -1.5, 2.5, 0.0});
  const std::vector<int16_t> q = quantize(coeffs, unit);
  CHECK(q[0] == 1);
  CHECK(q[1] == -2);
  CHECK(q[2] == 3);
  CHECK(q[3] == 0);

  QuantTable fives = unit;
  fives.entries = {5.0, 5.0, 5.0, 5.0};
  const Tensor2 c2(2, 2, {7.5, 0.0, 0.0, 0.0});
  CHECK(quantize(c2, fives)[0] == 2);  // 7.5/5 = 1.5 rounds away from zero

  const Tensor2 zeros(2, 2);
  for (int16_t v : quantize(zeros, unit)) CHECK(v == 0);
}

TEST_CASE("luminance table scales monotonically with quality") {
  const QuantTable q1 = QuantTable::luminance(8, 1.0);
  for (double e : q1.entries) CHECK(e == 1.0);
  const QuantTable q05 = QuantTable::luminance(8, 0.5);
  CHECK(q05.entry(0, 0) == doctest::Approx(16.0));
  const QuantTable q02 = QuantTable::luminance(8, 0.2);
  for (size_t i = 0; i < q05.entries.size(); ++i) CHECK(q02.entries[i] >= q05.entries[i]);
  for (double e : q02.entries) CHECK(e >= 1.0);
  CHECK_THROWS_AS(QuantTable::luminance(8, 0.0), ParamError);
  CHECK_THROWS_AS(QuantTable::luminance(8, 1.5), ParamError);
}

TEST_CASE("aligned grid geometry") {
  ImageBuffer img(64, 64, 1);
  const QuantTable table = QuantTable::luminance(8, 0.8);
  const QuantizedRepresentation rep = encode_image(img, table, PatchMode::Aligned);
  CHECK(rep.grid_rows == 8);
  CHECK(rep.grid_cols == 8);

  ImageBuffer bad(60, 64, 1);
  CHECK_THROWS_AS(encode_image(bad, table, PatchMode::Aligned), GeometryError);
}

TEST_CASE("overlapping grid uses stride edge/2") {
  ImageBuffer img(64, 64, 1);
  const QuantTable table = QuantTable::luminance(8, 0.8);
  const QuantizedRepresentation rep = encode_image(img, table, PatchMode::Overlapping);
  CHECK(rep.grid_rows == 15);
  CHECK(rep.grid_cols == 15);
}

TEST_CASE("constant image has zero entropy estimate") {
  ImageBuffer img(32, 32, 1);
  for (double& p : img.pix) p = 0.62;
  const QuantTable table = QuantTable::luminance(8, 0.7);
  const QuantizedRepresentation rep = encode_image(img, table, PatchMode::Aligned);
  CHECK(rep.bpp_estimate == doctest::Approx(0.0));

  const ImageBuffer back = baseline_decode(rep);
  // DC-only signal: the error is bounded by half a DC quantization step,
  // spread uniformly over the block in the level-shifted 8-bit domain.
  const double bound = table.entry(0, 0) / 2.0 / 8.0 / 255.0;
  for (double v : back.pix) CHECK(std::fabs(v - 0.62) <= bound + 1e-9);
}

TEST_CASE("mid-gray image reconstructs exactly") {
  ImageBuffer img(16, 16, 1);
  for (double& p : img.pix) p = 0.5;  // level shift maps this block to zero
  const QuantizedRepresentation rep =
      encode_image(img, QuantTable::luminance(8, 0.3), PatchMode::Aligned);
  const ImageBuffer back = baseline_decode(rep);
  for (double v : back.pix) CHECK(v == 0.5);
}

TEST_CASE("unit table with integer-valued coefficients is lossless") {
  // Build an image whose shifted-domain DCT coefficients are integers, so a
  // unit table quantizes without loss.
  Tensor2 coeffs(8, 8);
  RngStream rng(5);
  for (double& v : coeffs.data) v = std::round(rng.next_uniform(-20.0, 20.0));
  const Tensor2 shifted = dct_inverse(coeffs);

  ImageBuffer img(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) img.at(y, x) = shifted.at(y, x) / 255.0 + 0.5;
  REQUIRE(*std::min_element(img.pix.begin(), img.pix.end()) >= 0.0);
  REQUIRE(*std::max_element(img.pix.begin(), img.pix.end()) <= 1.0);

  const QuantTable unit = QuantTable::luminance(8, 1.0);
  const ImageBuffer back = baseline_decode(encode_image(img, unit, PatchMode::Aligned));
  for (size_t i = 0; i < img.pix.size(); ++i) {
    CHECK(back.pix[i] == doctest::Approx(img.pix[i]).epsilon(1e-9));
  }
}

TEST_CASE("baseline PSNR regression on the desk corpus") {
  const ImageBuffer img = test_support::desk_image(0);
  const QuantTable table = QuantTable::luminance(8, 1.0);
  const double db = psnr(baseline_decode(encode_image(img, table, PatchMode::Aligned)), img);
  CHECK(std::isfinite(db));
  CHECK(db > 20.0);
}

TEST_CASE("bpp estimate is monotone non-increasing as quality drops") {
  const ImageBuffer img = test_support::desk_image(1);
  double prev = 1e9;
  for (double q : {1.0, 0.8, 0.6, 0.4, 0.2, 0.1}) {
    const QuantizedRepresentation rep =
        encode_image(img, QuantTable::luminance(8, q), PatchMode::Aligned);
    CHECK(rep.bpp_estimate <= prev + 1e-12);
    prev = rep.bpp_estimate;
  }
}

TEST_CASE("encoder is deterministic and SNEQ1 round trips") {
  const ImageBuffer img = test_support::desk_image(2);
  const QuantTable table = QuantTable::luminance(8, 0.5);
  const QuantizedRepresentation r1 = encode_image(img, table, PatchMode::Overlapping);
  const QuantizedRepresentation r2 = encode_image(img, table, PatchMode::Overlapping);
  CHECK(r1.coeffs == r2.coeffs);
  CHECK(r1.bpp_estimate == r2.bpp_estimate);

  const std::vector<uint8_t> bytes = encode_sneq(r1);
  const QuantizedRepresentation r3 = decode_sneq(bytes);
  CHECK(r3.coeffs == r1.coeffs);
  CHECK(r3.grid_rows == r1.grid_rows);
  CHECK(r3.grid_cols == r1.grid_cols);
  CHECK(r3.mode == r1.mode);
  CHECK(r3.table.entries == r1.table.entries);
  CHECK(r3.bpp_estimate == r1.bpp_estimate);
  CHECK(encode_sneq(r3) == bytes);
}

TEST_CASE("overlapping baseline decode averages overlapped pixels") {
  const ImageBuffer img = test_support::desk_image(3);
  const QuantTable table = QuantTable::luminance(8, 1.0);
  const ImageBuffer back = baseline_decode(encode_image(img, table, PatchMode::Overlapping));
  CHECK(psnr(back, img) > 20.0);
}
