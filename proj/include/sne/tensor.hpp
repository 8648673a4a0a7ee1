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

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "sne/errors.hpp"

namespace sne {

// Dense row-major matrix of 64-bit reals. All heavier math lives in the
// free functions below so the autodiff tape and the plain decode path share
// one implementation.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Tensor2(int r, int c, std::initializer_list<double> values);

  static Tensor2 full(int r, int c, double v);
  static Tensor2 identity(int n);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;

  std::string shape_str() const;
};

// Throws ShapeError naming both shapes when a.cols != b.rows.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);

Tensor2 add(const Tensor2& a, const Tensor2& b);
Tensor2 sub(const Tensor2& a, const Tensor2& b);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);
Tensor2 scale(const Tensor2& a, double k);

// out[i] = k * a[i] + c
Tensor2 affine(const Tensor2& a, double k, double c);

double sum_all(const Tensor2& a);
double max_abs(const Tensor2& a);

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op);

}  // namespace sne
