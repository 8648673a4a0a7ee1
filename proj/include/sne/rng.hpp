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

#include "sne/tensor.hpp"

namespace sne {

// Counter-based random stream: every draw is a hash of (seed, counter), so a
// given seed yields the same sequence regardless of where or when the stream
// is consumed. Substreams derived with distinct tags are independent, which
// is what keeps shuffling, initialization and noise sampling decoupled from
// thread layout.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : seed_(seed) {}

  // Independent substream; (tag_a, tag_b) select it.
  RngStream derive(uint64_t tag_a, uint64_t tag_b = 0) const;

  uint64_t next_u64();

  // Uniform in [0,1).
  double next_uniform();
  double next_uniform(double lo, double hi);

  // Mean mu, variance sigma2. Throws ParamError when sigma2 < 0; sigma2 == 0
  // returns mu exactly.
  double next_gaussian(double mu, double sigma2);

  Tensor2 uniform_tensor(int rows, int cols, double lo, double hi);
  Tensor2 gaussian_tensor(int rows, int cols, double mu, double sigma2);

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_ = 0;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// sample_gaussian(rng, mu, sigma2, shape)
inline Tensor2 sample_gaussian(RngStream& rng, double mu, double sigma2, int rows, int cols) {
  return rng.gaussian_tensor(rows, cols, mu, sigma2);
}

}  // namespace sne
