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

#include "sne/gradcheck.hpp"

#include <cmath>
#include <cstring>

namespace sne {

FdReport finite_diff_check(const std::function<Value(GradTape&)>& build_loss,
                           const ParamVector& params, double epsilon) {
  if (epsilon < 1e-7 || epsilon > 1e-4) {
    throw ParamError("finite_diff_check: epsilon must lie in [1e-7, 1e-4]");
  }

  const auto eval = [&build_loss]() {
    GradTape tape;
    Value loss = build_loss(tape);
    return tape.scalar(loss);
  };

  const double v1 = eval();
  const double v2 = eval();
  if (std::memcmp(&v1, &v2, sizeof(double)) != 0) {
    throw DeterminismError("finite_diff_check: loss is not deterministic across evaluations");
  }

  GradTape tape;
  Value loss = build_loss(tape);
  tape.backward(loss);

  FdReport report;
  for (const NamedParam& p : params) {
    const Tensor2* g = tape.param_grad(p.name);
    if (g == nullptr) {
      throw ParamError("finite_diff_check: loss did not bind parameter " + p.name);
    }
    for (size_t i = 0; i < p.tensor->size(); ++i) {
      const double saved = p.tensor->data[i];
      p.tensor->data[i] = saved + epsilon;
      const double fp = eval();
      p.tensor->data[i] = saved - epsilon;
      const double fm = eval();
      p.tensor->data[i] = saved;

      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double analytic = g->data[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_name = p.name;
        report.worst_index = static_cast<int>(i);
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace sne
