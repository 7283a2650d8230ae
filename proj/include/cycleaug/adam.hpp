// Copyright 2026 The cycleaug Authors
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

#include <cmath>
#include <cstdint>

#include "cycleaug/tensor.hpp"

namespace cycleaug {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one parameter tensor.
template <typename T>
struct AdamState {
  Tensor<T> first_moment;
  Tensor<T> second_moment;
  std::uint64_t step_count = 0;
  AdamHyper hyper;

  AdamState() = default;
  explicit AdamState(const Shape& shape, AdamHyper h = {})
      : first_moment(Tensor<T>::zeros(shape)), second_moment(Tensor<T>::zeros(shape)), hyper(h) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update of `param` in place.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state, double lr) {
  param.require_same_shape(grad, "adam_step (param vs grad)");
  param.require_same_shape(state.first_moment, "adam_step (param vs moments)");
  state.step_count += 1;
  const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
  const double t = static_cast<double>(state.step_count);
  const T bc1 = static_cast<T>(1.0 - std::pow(b1, t));
  const T bc2 = static_cast<T>(1.0 - std::pow(b2, t));
  const T step = static_cast<T>(lr);
  const T eps = static_cast<T>(state.hyper.epsilon);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  T* p = param.data().data();
  T* m = state.first_moment.data().data();
  T* v = state.second_moment.data().data();
  const T* g = grad.data().data();
  for (std::size_t i = 0; i < param.numel(); ++i) {
    m[i] = tb1 * m[i] + (T{1} - tb1) * g[i];
    v[i] = tb2 * v[i] + (T{1} - tb2) * g[i] * g[i];
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    p[i] -= step * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace cycleaug
