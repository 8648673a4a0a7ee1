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

#include "sne/rng.hpp"

#include <cmath>

namespace sne {
namespace {

// SplitMix64 finalizer.
uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

}  // namespace

RngStream RngStream::derive(uint64_t tag_a, uint64_t tag_b) const {
  uint64_t s = mix64(seed_ + kGamma);
  s = mix64(s ^ (tag_a + kGamma));
  s = mix64(s ^ (tag_b + 2 * kGamma));
  return RngStream(s);
}

uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGamma);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
  return lo + next_uniform() * (hi - lo);
}

double RngStream::next_gaussian(double mu, double sigma2) {
  if (sigma2 < 0.0) throw ParamError("gaussian variance must be >= 0");
  if (sigma2 == 0.0) return mu;
  const double sigma = std::sqrt(sigma2);
  if (has_spare_) {
    has_spare_ = false;
    return mu + sigma * spare_;
  }
  // Box-Muller; u1 kept in (0,1] so the log is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mu + sigma * r * std::cos(theta);
}

Tensor2 RngStream::uniform_tensor(int rows, int cols, double lo, double hi) {
  Tensor2 t(rows, cols);
  for (double& v : t.data) v = next_uniform(lo, hi);
  return t;
}

Tensor2 RngStream::gaussian_tensor(int rows, int cols, double mu, double sigma2) {
  if (sigma2 < 0.0) throw ParamError("gaussian variance must be >= 0");
  Tensor2 t(rows, cols);
  for (double& v : t.data) v = next_gaussian(mu, sigma2);
  return t;
}

}  // namespace sne
