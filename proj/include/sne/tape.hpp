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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sne/tensor.hpp"

namespace sne {

enum class Activation : uint8_t { Identity, Sigmoid, Tanh };

// Handle to a tape node. Only meaningful together with the tape that
// produced it.
struct Value {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Tensor2 values. The forward pass records one node
// per primitive application with its cached output; backward() replays the
// records in exact reverse order, accumulating gradients additively, so a
// parameter used many times receives the sum of all its contributions.
//
// A tape is single-owner: no concurrent use. Parallel gradient evaluation is
// done with independent tapes whose per-parameter gradients are summed by a
// coordinator.
class GradTape {
 public:
  // Leaf with no gradient of interest.
  Value constant(Tensor2 t);
  // Leaf bound to an external tensor (copied in at bind time). Names must be
  // unique per tape; gradients are read back per name after backward().
  Value param(const std::string& name, const Tensor2& t);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);  // elementwise
  Value affine(Value a, double k, double c);
  Value activation(Value x, Activation kind);
  Value sigmoid(Value x) { return activation(x, Activation::Sigmoid); }
  Value tanh(Value x) { return activation(x, Activation::Tanh); }
  // a: m x n, bias: 1 x n, broadcast down the rows.
  Value add_row_broadcast(Value a, Value bias);
  // a: m x n, u: m x 1, each row of a scaled by its u entry.
  Value mul_col_broadcast(Value a, Value u);
  // Elementwise min; ties send the gradient to a.
  Value min_elem(Value a, Value b);
  Value concat_cols(Value a, Value b);
  // m x n -> m x 1 of per-row Euclidean norms. Zero rows get zero gradient.
  Value l2norm_rows(Value a);
  // -> 1 x 1 sum of squared entries.
  Value sum_sq(Value a);
  // Hard threshold at 0.5: forward is 1 if v >= 0.5 else 0. Backward passes
  // the upstream gradient unchanged (straight-through identity surrogate);
  // with set_ste_backward(false) it passes zero instead, which restricts a
  // finite-difference comparison to the non-binarized paths.
  Value binarize_st(Value x);

  void set_ste_backward(bool on) { ste_backward_ = on; }
  bool ste_backward() const { return ste_backward_; }

  const Tensor2& value(Value v) const { return vals_[v.id]; }
  double scalar(Value v) const;

  // Accumulates gradients of `root` (1x1) w.r.t. every node. Resets previous
  // gradients first, so repeated calls from the same forward pass agree.
  void backward(Value root);

  const Tensor2& grad(Value v) const { return grads_[v.id]; }
  // nullptr when the name is unknown.
  const Tensor2* param_grad(const std::string& name) const;
  // Deterministic (name-ordered) listing of bound parameters.
  std::vector<std::pair<std::string, const Tensor2*>> param_grads() const;

  size_t mark() const { return nodes_.size(); }
  // Drops every node recorded after `mark`; bound parameters at or past the
  // mark are unbound. Used to keep decode memory flat across episodes.
  void truncate(size_t mark);

  size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    Const,
    Param,
    Matmul,
    Add,
    Sub,
    Mul,
    Affine,
    Act,
    AddRowBroadcast,
    MulColBroadcast,
    MinElem,
    ConcatCols,
    L2NormRows,
    SumSq,
    BinarizeST,
  };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double k = 0.0;
    double c = 0.0;
    Activation act = Activation::Identity;
  };

  Value push(Node n, Tensor2 out);
  const Tensor2& in(const Node& n) const { return vals_[n.a]; }

  std::vector<Node> nodes_;
  std::vector<Tensor2> vals_;
  std::vector<Tensor2> grads_;
  std::map<std::string, int> params_;
  bool ste_backward_ = true;
};

}  // namespace sne
