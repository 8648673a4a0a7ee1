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

#include "sne/tape.hpp"

#include <cmath>

namespace sne {

Value GradTape::push(Node n, Tensor2 out) {
  nodes_.push_back(n);
  vals_.push_back(std::move(out));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value GradTape::constant(Tensor2 t) { return push(Node{Op::Const}, std::move(t)); }

Value GradTape::param(const std::string& name, const Tensor2& t) {
  if (params_.count(name)) throw ParamError("parameter bound twice: " + name);
  Value v = push(Node{Op::Param}, t);
  params_[name] = v.id;
  return v;
}

Value GradTape::matmul(Value a, Value b) {
  Tensor2 out = sne::matmul(vals_[a.id], vals_[b.id]);
  return push(Node{Op::Matmul, a.id, b.id}, std::move(out));
}

Value GradTape::add(Value a, Value b) {
  Tensor2 out = sne::add(vals_[a.id], vals_[b.id]);
  return push(Node{Op::Add, a.id, b.id}, std::move(out));
}

Value GradTape::sub(Value a, Value b) {
  Tensor2 out = sne::sub(vals_[a.id], vals_[b.id]);
  return push(Node{Op::Sub, a.id, b.id}, std::move(out));
}

Value GradTape::mul(Value a, Value b) {
  Tensor2 out = sne::hadamard(vals_[a.id], vals_[b.id]);
  return push(Node{Op::Mul, a.id, b.id}, std::move(out));
}

Value GradTape::affine(Value a, double k, double c) {
  Tensor2 out = sne::affine(vals_[a.id], k, c);
  Node n{Op::Affine, a.id};
  n.k = k;
  n.c = c;
  return push(n, std::move(out));
}

Value GradTape::activation(Value x, Activation kind) {
  Tensor2 out = vals_[x.id];
  switch (kind) {
    case Activation::Identity:
      break;
    case Activation::Sigmoid:
      for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::Tanh:
      for (double& v : out.data) v = std::tanh(v);
      break;
  }
  Node n{Op::Act, x.id};
  n.act = kind;
  return push(n, std::move(out));
}

Value GradTape::add_row_broadcast(Value a, Value bias) {
  const Tensor2& x = vals_[a.id];
  const Tensor2& b = vals_[bias.id];
  if (b.rows != 1 || b.cols != x.cols) {
    throw ShapeError("add_row_broadcast: bias " + b.shape_str() + " does not broadcast over " +
                     x.shape_str());
  }
  Tensor2 out = x;
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(i, j) += b.at(0, j);
  return push(Node{Op::AddRowBroadcast, a.id, bias.id}, std::move(out));
}

Value GradTape::mul_col_broadcast(Value a, Value u) {
  const Tensor2& x = vals_[a.id];
  const Tensor2& g = vals_[u.id];
  if (g.cols != 1 || g.rows != x.rows) {
    throw ShapeError("mul_col_broadcast: gate " + g.shape_str() + " does not broadcast over " +
                     x.shape_str());
  }
  Tensor2 out = x;
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out.at(i, j) *= g.at(i, 0);
  return push(Node{Op::MulColBroadcast, a.id, u.id}, std::move(out));
}

Value GradTape::min_elem(Value a, Value b) {
  const Tensor2& x = vals_[a.id];
  const Tensor2& y = vals_[b.id];
  require_same_shape(x, y, "min_elem");
  Tensor2 out = x;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = std::min(x.data[i], y.data[i]);
  return push(Node{Op::MinElem, a.id, b.id}, std::move(out));
}

Value GradTape::concat_cols(Value a, Value b) {
  const Tensor2& x = vals_[a.id];
  const Tensor2& y = vals_[b.id];
  if (x.rows != y.rows) {
    throw ShapeError("concat_cols: row counts differ, " + x.shape_str() + " vs " + y.shape_str());
  }
  Tensor2 out(x.rows, x.cols + y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) out.at(i, j) = x.at(i, j);
    for (int j = 0; j < y.cols; ++j) out.at(i, x.cols + j) = y.at(i, j);
  }
  return push(Node{Op::ConcatCols, a.id, b.id}, std::move(out));
}

Value GradTape::l2norm_rows(Value a) {
  const Tensor2& x = vals_[a.id];
  Tensor2 out(x.rows, 1);
  for (int i = 0; i < x.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) s += x.at(i, j) * x.at(i, j);
    out.at(i, 0) = std::sqrt(s);
  }
  return push(Node{Op::L2NormRows, a.id}, std::move(out));
}

Value GradTape::sum_sq(Value a) {
  const Tensor2& x = vals_[a.id];
  double s = 0.0;
  for (double v : x.data) s += v * v;
  Tensor2 out(1, 1);
  out.at(0, 0) = s;
  return push(Node{Op::SumSq, a.id}, std::move(out));
}

Value GradTape::binarize_st(Value x) {
  Tensor2 out = vals_[x.id];
  for (double& v : out.data) v = (v >= 0.5) ? 1.0 : 0.0;
  return push(Node{Op::BinarizeST, x.id}, std::move(out));
}

double GradTape::scalar(Value v) const {
  const Tensor2& t = vals_[v.id];
  if (t.rows != 1 || t.cols != 1) throw ShapeError("scalar: value is " + t.shape_str());
  return t.at(0, 0);
}

const Tensor2* GradTape::param_grad(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) return nullptr;
  return &grads_[it->second];
}

std::vector<std::pair<std::string, const Tensor2*>> GradTape::param_grads() const {
  std::vector<std::pair<std::string, const Tensor2*>> out;
  out.reserve(params_.size());
  for (const auto& [name, id] : params_) out.emplace_back(name, &grads_[id]);
  return out;
}

void GradTape::truncate(size_t mark) {
  if (mark >= nodes_.size()) return;
  nodes_.resize(mark);
  vals_.resize(mark);
  grads_.clear();
  for (auto it = params_.begin(); it != params_.end();) {
    if (static_cast<size_t>(it->second) >= mark) {
      it = params_.erase(it);
    } else {
      ++it;
    }
  }
}

void GradTape::backward(Value root) {
  const Tensor2& rv = vals_[root.id];
  if (rv.rows != 1 || rv.cols != 1) {
    throw ShapeError("backward: root must be 1x1, got " + rv.shape_str());
  }
  grads_.clear();
  grads_.resize(vals_.size());
  for (size_t i = 0; i < vals_.size(); ++i) grads_[i] = Tensor2(vals_[i].rows, vals_[i].cols);
  grads_[root.id].at(0, 0) = 1.0;

  for (int i = root.id; i >= 0; --i) {
    const Node& n = nodes_[i];
    const Tensor2& g = grads_[i];
    switch (n.op) {
      case Op::Const:
      case Op::Param:
        break;
      case Op::Matmul: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        // da = g . b^T ; db = a^T . g
        Tensor2& ga = grads_[n.a];
        for (int r = 0; r < a.rows; ++r)
          for (int k = 0; k < a.cols; ++k) {
            double s = 0.0;
            for (int j = 0; j < b.cols; ++j) s += g.at(r, j) * b.at(k, j);
            ga.at(r, k) += s;
          }
        Tensor2& gb = grads_[n.b];
        for (int k = 0; k < a.cols; ++k)
          for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int r = 0; r < a.rows; ++r) s += a.at(r, k) * g.at(r, j);
            gb.at(k, j) += s;
          }
        break;
      }
      case Op::Add: {
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (size_t t = 0; t < g.size(); ++t) {
          ga.data[t] += g.data[t];
          gb.data[t] += g.data[t];
        }
        break;
      }
      case Op::Sub: {
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (size_t t = 0; t < g.size(); ++t) {
          ga.data[t] += g.data[t];
          gb.data[t] -= g.data[t];
        }
        break;
      }
      case Op::Mul: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (size_t t = 0; t < g.size(); ++t) {
          ga.data[t] += g.data[t] * b.data[t];
          gb.data[t] += g.data[t] * a.data[t];
        }
        break;
      }
      case Op::Affine: {
        Tensor2& ga = grads_[n.a];
        for (size_t t = 0; t < g.size(); ++t) ga.data[t] += n.k * g.data[t];
        break;
      }
      case Op::Act: {
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        switch (n.act) {
          case Activation::Identity:
            for (size_t t = 0; t < g.size(); ++t) ga.data[t] += g.data[t];
            break;
          case Activation::Sigmoid:
            for (size_t t = 0; t < g.size(); ++t)
              ga.data[t] += g.data[t] * y.data[t] * (1.0 - y.data[t]);
            break;
          case Activation::Tanh:
            for (size_t t = 0; t < g.size(); ++t)
              ga.data[t] += g.data[t] * (1.0 - y.data[t] * y.data[t]);
            break;
        }
        break;
      }
      case Op::AddRowBroadcast: {
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        const Tensor2& x = vals_[n.a];
        for (int r = 0; r < x.rows; ++r)
          for (int j = 0; j < x.cols; ++j) {
            ga.at(r, j) += g.at(r, j);
            gb.at(0, j) += g.at(r, j);
          }
        break;
      }
      case Op::MulColBroadcast: {
        const Tensor2& x = vals_[n.a];
        const Tensor2& u = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gu = grads_[n.b];
        for (int r = 0; r < x.rows; ++r) {
          double s = 0.0;
          for (int j = 0; j < x.cols; ++j) {
            ga.at(r, j) += g.at(r, j) * u.at(r, 0);
            s += g.at(r, j) * x.at(r, j);
          }
          gu.at(r, 0) += s;
        }
        break;
      }
      case Op::MinElem: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (size_t t = 0; t < g.size(); ++t) {
          if (a.data[t] <= b.data[t]) {
            ga.data[t] += g.data[t];
          } else {
            gb.data[t] += g.data[t];
          }
        }
        break;
      }
      case Op::ConcatCols: {
        const Tensor2& a = vals_[n.a];
        const Tensor2& b = vals_[n.b];
        Tensor2& ga = grads_[n.a];
        Tensor2& gb = grads_[n.b];
        for (int r = 0; r < a.rows; ++r) {
          for (int j = 0; j < a.cols; ++j) ga.at(r, j) += g.at(r, j);
          for (int j = 0; j < b.cols; ++j) gb.at(r, j) += g.at(r, a.cols + j);
        }
        break;
      }
      case Op::L2NormRows: {
        const Tensor2& x = vals_[n.a];
        const Tensor2& y = vals_[i];
        Tensor2& ga = grads_[n.a];
        for (int r = 0; r < x.rows; ++r) {
          const double norm = y.at(r, 0);
          if (norm <= 0.0) continue;
          const double s = g.at(r, 0) / norm;
          for (int j = 0; j < x.cols; ++j) ga.at(r, j) += s * x.at(r, j);
        }
        break;
      }
      case Op::SumSq: {
        const Tensor2& x = vals_[n.a];
        Tensor2& ga = grads_[n.a];
        const double s = 2.0 * g.at(0, 0);
        for (size_t t = 0; t < x.size(); ++t) ga.data[t] += s * x.data[t];
        break;
      }
      case Op::BinarizeST: {
        if (ste_backward_) {
          Tensor2& ga = grads_[n.a];
          for (size_t t = 0; t < g.size(); ++t) ga.data[t] += g.data[t];
        }
        break;
      }
    }
  }
}

}  // namespace sne
