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

#include "sne/tensor.hpp"

#include <cmath>
#include <cstdio>

namespace sne {

Tensor2::Tensor2(int r, int c, std::initializer_list<double> values) : Tensor2(r, c) {
  if (values.size() != size()) {
    throw ShapeError("initializer length does not match " + shape_str());
  }
  size_t i = 0;
  for (double v : values) data[i++] = v;
}

Tensor2 Tensor2::full(int r, int c, double v) {
  Tensor2 t(r, c);
  for (double& x : t.data) x = v;
  return t;
}

Tensor2 Tensor2::identity(int n) {
  Tensor2 t(n, n);
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

bool Tensor2::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor2::shape_str() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%dx%d", rows, cols);
  return buf;
}

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " times " +
                     b.shape_str());
  }
  Tensor2 out(a.rows, b.cols);
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
    double* orow = &out.data[static_cast<size_t>(i) * out.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor2 add(const Tensor2& a, const Tensor2& b) {
  require_same_shape(a, b, "add");
  Tensor2 out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Tensor2 sub(const Tensor2& a, const Tensor2& b) {
  require_same_shape(a, b, "sub");
  Tensor2 out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
  require_same_shape(a, b, "hadamard");
  Tensor2 out = a;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Tensor2 scale(const Tensor2& a, double k) {
  Tensor2 out = a;
  for (double& v : out.data) v *= k;
  return out;
}

Tensor2 affine(const Tensor2& a, double k, double c) {
  Tensor2 out = a;
  for (double& v : out.data) v = k * v + c;
  return out;
}

double sum_all(const Tensor2& a) {
  double s = 0.0;
  for (double v : a.data) s += v;
  return s;
}

double max_abs(const Tensor2& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace sne
