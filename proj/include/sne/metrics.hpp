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

#include <string>
#include <vector>

#include "sne/estimator.hpp"
#include "sne/image.hpp"

namespace sne {

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double ms_ssim = 0.0;
  double bpp = 0.0;
};

// 10 log10(1/MSE) for [0,1] images, capped at 99 dB (the cap is also the
// value reported for identical images).
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Uniform 8x8 window (matching the patch geometry, not the Gaussian-11
// reference implementation), C1=(0.01)^2, C2=(0.03)^2.
double ssim(const ImageBuffer& a, const ImageBuffer& b, int window = 8, double c1 = 0.0001,
            double c2 = 0.0009);

// Standard 5-scale weights; coarser scales come from 2x2 mean downsampling.
// Requires dims >= 2^(scales-1) * window.
double ms_ssim(const ImageBuffer& a, const ImageBuffer& b, int scales = 5, int window = 8);

// Largest scale count ms_ssim accepts for these dimensions (at most 5).
int ms_ssim_max_scales(const ImageBuffer& img, int window = 8);

// Mean contrast-structure term over windows; exposed for the scale-by-scale
// oracle in the tests.
double ssim_contrast_structure(const ImageBuffer& a, const ImageBuffer& b, int window = 8,
                               double c2 = 0.0009);
ImageBuffer downsample_2x2_mean(const ImageBuffer& img);

struct KSweepReport {
  std::vector<int> k_values;
  std::vector<double> psnr_db;
  double bpp = 0.0;
};

// Decodes once per K from the same parameters and reports PSNR against the
// reference image.
KSweepReport ksweep(const QuantizedRepresentation& rep, const SneParams& params,
                    const ContextSpec& spec, const std::vector<int>& k_values,
                    const ImageBuffer& reference);

// Aligned text table: one K column per entry, a PSNR row, and a bpp note.
std::string render_ksweep(const KSweepReport& report);

}  // namespace sne
