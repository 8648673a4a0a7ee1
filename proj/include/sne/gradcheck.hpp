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

#include <functional>
#include <string>
#include <vector>

#include "sne/tape.hpp"

namespace sne {

struct NamedParam {
  std::string name;
  Tensor2* tensor;
};
using ParamVector = std::vector<NamedParam>;

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_name;
  int worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference verification of tape gradients. `build_loss` must
// construct the scalar loss on the given tape from the *current* contents of
// `params`, binding each tensor it uses with tape.param(<name matching
// params>). The loss must be deterministic: it is evaluated twice up front
// and a bitwise mismatch raises DeterminismError.
//
// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator;
// epsilon must lie in [1e-7, 1e-4].
FdReport finite_diff_check(const std::function<Value(GradTape&)>& build_loss,
                           const ParamVector& params, double epsilon = 1e-5);

}  // namespace sne
