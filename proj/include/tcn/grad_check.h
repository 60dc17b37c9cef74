// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TCN_GRAD_CHECK_H_
#define TCN_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "tcn/autodiff.h"
#include "tcn/param_store.h"

namespace tcn {

struct GradCheckOptions {
  // Central-difference step.
  double step = 1e-5;
  // Relative errors are |analytic - numeric| / max(|analytic|, |numeric|,
  // denominator_floor). With the default, a 1e-4 relative bound doubles as a
  // 1e-6 absolute bound for gradients smaller than 1e-2.
  double denominator_floor = 1e-2;
  // A coordinate whose one-sided slopes differ by more than this (relative to
  // max(1, |slope|)) straddles a kink, e.g. a ReLU at exactly zero, and is
  // skipped.
  double kink_tolerance = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  size_t checked = 0;
  size_t skipped = 0;
  std::string worst;  // description of the worst coordinate
};

// f maps a tape and an input Var to a scalar Var.
using ScalarFunction = std::function<Var(Tape&, const Var&)>;

// Compares the backward-pass gradient of f at x with central differences.
// Throws ShapeError if f is not scalar-valued.
GradCheckResult GradCheck(const ScalarFunction& f, const Tensor& x,
                          const GradCheckOptions& options = {});

// Same check over the named parameters of a store (all trainable ones when
// `names` is empty). `loss` must build its graph from the store's current values; the
// store is restored before returning.
GradCheckResult GradCheckParams(const std::function<Var(Tape&)>& loss,
                                ParamStore& store,
                                const std::vector<std::string>& names = {},
                                const GradCheckOptions& options = {});

}  // namespace tcn

#endif  // TCN_GRAD_CHECK_H_
