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

#include "sne/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace sne {
namespace {

constexpr double kPsnrCap = 99.0;

// Luminance plane: mean over channels (identity for grayscale).
ImageBuffer luma(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  ImageBuffer out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels; ++c) s += img.at(y, x, c);
      out.at(y, x) = s / img.channels;
    }
  }
  return out;
}

void require_same_dims(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
  if (!a.same_dims(b)) {
    throw ShapeError(std::string(op) + ": image dimensions differ");
  }
}

// Window statistics via summed-area tables so the sliding pass is O(1) per
// position.
struct IntegralStats {
  int height, width;
  std::vector<double> sa, sb, saa, sbb, sab;

  IntegralStats(const ImageBuffer& a, const ImageBuffer& b)
      : height(a.height), width(a.width) {
    const size_t n = static_cast<size_t>(height + 1) * (width + 1);
    sa.assign(n, 0.0);
    sb.assign(n, 0.0);
    saa.assign(n, 0.0);
    sbb.assign(n, 0.0);
    sab.assign(n, 0.0);
    const int w1 = width + 1;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double va = a.at(y, x);
        const double vb = b.at(y, x);
        const size_t i = static_cast<size_t>(y + 1) * w1 + (x + 1);
        const size_t up = i - w1;
        sa[i] = va + sa[i - 1] + sa[up] - sa[up - 1];
        sb[i] = vb + sb[i - 1] + sb[up] - sb[up - 1];
        saa[i] = va * va + saa[i - 1] + saa[up] - saa[up - 1];
        sbb[i] = vb * vb + sbb[i - 1] + sbb[up] - sbb[up - 1];
        sab[i] = va * vb + sab[i - 1] + sab[up] - sab[up - 1];
      }
    }
  }

  double box(const std::vector<double>& s, int y, int x, int e) const {
    const int w1 = width + 1;
    const size_t tl = static_cast<size_t>(y) * w1 + x;
    const size_t br = static_cast<size_t>(y + e) * w1 + (x + e);
    const size_t tr = static_cast<size_t>(y) * w1 + (x + e);
    const size_t bl = static_cast<size_t>(y + e) * w1 + x;
    return s[br] - s[tr] - s[bl] + s[tl];
  }
};

struct SsimTerms {
  double full = 0.0;  // luminance * contrast-structure
  double cs = 0.0;    // contrast-structure only
};

SsimTerms ssim_terms(const ImageBuffer& ia, const ImageBuffer& ib, int window, double c1,
                     double c2) {
  require_same_dims(ia, ib, "ssim");
  const ImageBuffer a = luma(ia);
  const ImageBuffer b = luma(ib);
  if (a.height < window || a.width < window) {
    throw GeometryError("image smaller than SSIM window (" + std::to_string(window) + ")");
  }
  const IntegralStats st(a, b);
  const double n = static_cast<double>(window) * window;
  double sum_full = 0.0, sum_cs = 0.0;
  long count = 0;
  for (int y = 0; y + window <= a.height; ++y) {
    for (int x = 0; x + window <= a.width; ++x) {
      const double mu_a = st.box(st.sa, y, x, window) / n;
      const double mu_b = st.box(st.sb, y, x, window) / n;
      const double var_a = st.box(st.saa, y, x, window) / n - mu_a * mu_a;
      const double var_b = st.box(st.sbb, y, x, window) / n - mu_b * mu_b;
      const double cov = st.box(st.sab, y, x, window) / n - mu_a * mu_b;
      const double lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
      const double cs = (2.0 * cov + c2) / (var_a + var_b + c2);
      sum_full += lum * cs;
      sum_cs += cs;
      ++count;
    }
  }
  return {sum_full / count, sum_cs / count};
}

// Standard 5-scale MS-SSIM exponents.
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a, b, "psnr");
  if (a.pix.empty()) throw ShapeError("psnr: empty images");
  double se = 0.0;
  for (size_t i = 0; i < a.pix.size(); ++i) {
    const double d = a.pix[i] - b.pix[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.pix.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, int window, double c1, double c2) {
  return ssim_terms(a, b, window, c1, c2).full;
}

double ssim_contrast_structure(const ImageBuffer& a, const ImageBuffer& b, int window,
                               double c2) {
  return ssim_terms(a, b, window, 0.0001, c2).cs;
}

ImageBuffer downsample_2x2_mean(const ImageBuffer& img) {
  ImageBuffer out(img.height / 2, img.width / 2, img.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = 0.25 * (img.at(2 * y, 2 * x, c) + img.at(2 * y, 2 * x + 1, c) +
                                  img.at(2 * y + 1, 2 * x, c) + img.at(2 * y + 1, 2 * x + 1, c));
      }
    }
  }
  return out;
}

int ms_ssim_max_scales(const ImageBuffer& img, int window) {
  int scales = 0;
  int extent = std::min(img.height, img.width);
  while (scales < 5 && extent >= window) {
    ++scales;
    extent /= 2;
  }
  return scales;
}

double ms_ssim(const ImageBuffer& a, const ImageBuffer& b, int scales, int window) {
  require_same_dims(a, b, "ms_ssim");
  if (scales < 1 || scales > 5) throw ParamError("ms_ssim supports 1..5 scales");
  const int min_extent = window << (scales - 1);
  if (a.height < min_extent || a.width < min_extent) {
    throw GeometryError("ms_ssim with " + std::to_string(scales) + " scales needs at least " +
                        std::to_string(min_extent) + "x" + std::to_string(min_extent) +
                        " pixels");
  }
  // Truncated weights renormalized to sum to one.
  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += kMsWeights[s];

  ImageBuffer ca = a;
  ImageBuffer cb = b;
  double product = 1.0;
  for (int s = 0; s < scales; ++s) {
    const SsimTerms terms = ssim_terms(ca, cb, window, 0.0001, 0.0009);
    const double w = kMsWeights[s] / wsum;
    // Negative terms are clamped so the fractional powers stay real.
    const double t = std::max(0.0, s + 1 == scales ? terms.full : terms.cs);
    product *= std::pow(t, w);
    if (s + 1 < scales) {
      ca = downsample_2x2_mean(ca);
      cb = downsample_2x2_mean(cb);
    }
  }
  return product;
}

KSweepReport ksweep(const QuantizedRepresentation& rep, const SneParams& params,
                    const ContextSpec& spec, const std::vector<int>& k_values,
                    const ImageBuffer& reference) {
  KSweepReport report;
  report.bpp = rep.bpp_estimate;
  int prev = 0;
  for (int k : k_values) {
    if (k <= prev) throw ParamError("sweep K values must be strictly increasing");
    prev = k;
    const ImageBuffer decoded = decode_image(rep, params, spec, k);
    report.k_values.push_back(k);
    report.psnr_db.push_back(psnr(decoded, reference));
  }
  return report;
}

std::string render_ksweep(const KSweepReport& report) {
  std::string header = "      ";
  std::string row = "PSNR  ";
  for (size_t i = 0; i < report.k_values.size(); ++i) {
    char hbuf[32], vbuf[32];
    std::snprintf(hbuf, sizeof(hbuf), "K = %d", report.k_values[i]);
    std::snprintf(vbuf, sizeof(vbuf), "%.4f", report.psnr_db[i]);
    const int width = static_cast<int>(std::max(strlen(hbuf), strlen(vbuf))) + 2;
    char cell[48];
    std::snprintf(cell, sizeof(cell), "%*s", width, hbuf);
    header += cell;
    std::snprintf(cell, sizeof(cell), "%*s", width, vbuf);
    row += cell;
  }
  char bpp[64];
  std::snprintf(bpp, sizeof(bpp), "bpp = %.4f", report.bpp);
  return header + "\n" + row + "\n" + bpp + "\n";
}

}  // namespace sne
