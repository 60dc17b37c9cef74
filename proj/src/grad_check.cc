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

#include "tcn/grad_check.h"

#include <algorithm>
#include <cmath>

#include "tcn/errors.h"

namespace tcn {

namespace {

double ScalarValue(const Var& v) {
  if (v.value().size() != 1) {
    throw ShapeError("gradient check needs a scalar function, got shape " +
                     ShapeToString(v.value().shape()));
  }
  return v.value()[0];
}

// Shared coordinate loop. `eval` returns f with coordinate i set to value.
template <typename Eval>
void CheckCoordinate(const Eval& eval, double x0, double f0, double analytic,
                     const GradCheckOptions& options, const std::string& label,
                     GradCheckResult& result) {
  const double h = options.step;
  const double f_plus = eval(x0 + h);
  const double f_minus = eval(x0 - h);
  const double forward = (f_plus - f0) / h;
  const double backward = (f0 - f_minus) / h;
  const double scale = std::max({1.0, std::abs(forward), std::abs(backward)});
  if (std::abs(forward - backward) > options.kink_tolerance * scale) {
    ++result.skipped;
    return;
  }
  const double numeric = (f_plus - f_minus) / (2.0 * h);
  const double abs_err = std::abs(analytic - numeric);
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
  const double rel_err = abs_err / denom;
  ++result.checked;
  result.max_abs_error = std::max(result.max_abs_error, abs_err);
  if (result.worst.empty() || rel_err > result.max_rel_error) {
    result.max_rel_error = rel_err;
    result.worst = label + " analytic=" + std::to_string(analytic) +
                   " numeric=" + std::to_string(numeric);
  }
}

}  // namespace

GradCheckResult GradCheck(const ScalarFunction& f, const Tensor& x,
                          const GradCheckOptions& options) {
  Tensor analytic;
  double f0 = 0.0;
  {
    Tape tape;
    Var input = tape.Leaf(x);
    Var out = f(tape, input);
    f0 = ScalarValue(out);
    tape.Backward(out);
    analytic = input.grad().empty() ? Tensor::ZerosLike(x) : input.grad();
  }
  GradCheckResult result;
  Tensor probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    auto eval = [&](double value) {
      probe[i] = value;
      Tape tape;
      double r = ScalarValue(f(tape, tape.Constant(probe)));
      probe[i] = x[i];
      return r;
    };
    CheckCoordinate(eval, x[i], f0, analytic[i], options,
                    "x[" + std::to_string(i) + "]", result);
  }
  return result;
}

GradCheckResult GradCheckParams(const std::function<Var(Tape&)>& loss,
                                ParamStore& store, const std::vector<std::string>& names,
                                const GradCheckOptions& options) {
  std::vector<std::string> selected = names;
  if (selected.empty()) {
    for (size_t i = 0; i < store.size(); ++i) {
      if (store.at(i).trainable) selected.push_back(store.at(i).name);
    }
  }
  store.ZeroGrad();
  double f0 = 0.0;
  {
    Tape tape;
    Var out = loss(tape);
    f0 = ScalarValue(out);
    tape.Backward(out);
  }
  std::vector<Tensor> analytic;
  for (const std::string& name : selected) {
    const Parameter& p = store.Get(name);
    analytic.push_back(p.grad.empty() ? Tensor::ZerosLike(p.value) : p.grad);
  }
  store.ZeroGrad();

  GradCheckResult result;
  for (size_t k = 0; k < selected.size(); ++k) {
    Parameter& p = store.Get(selected[k]);
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double x0 = p.value[i];
      auto eval = [&](double value) {
        p.value[i] = value;
        Tape tape;
        double r = ScalarValue(loss(tape));
        p.value[i] = x0;
        return r;
      };
      CheckCoordinate(eval, x0, f0, analytic[k][i], options,
                      selected[k] + "[" + std::to_string(i) + "]", result);
    }
  }
  return result;
}

}  // namespace tcn
