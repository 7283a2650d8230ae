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

// Least-squares adversarial, cycle-consistency and combined objectives.

#pragma once

#include <stdexcept>
#include <vector>

#include "cycleaug/ops.hpp"

namespace cycleaug {

struct LsganTargets {
  double real = 1.0;
  double fake = 0.0;
  double gen = 1.0;
};

/// 1/2 mean((d_real - real)^2) + 1/2 mean((d_fake - fake)^2).
template <typename T>
Var<T> lsgan_discriminator_loss(Var<T> d_real, Var<T> d_fake, const LsganTargets& t = {}) {
  d_real.value().require_same_shape(d_fake.value(), "lsgan_discriminator_loss");
  const Var<T> real_term = ops::mean(ops::square(ops::add_scalar(d_real, static_cast<T>(-t.real))));
  const Var<T> fake_term = ops::mean(ops::square(ops::add_scalar(d_fake, static_cast<T>(-t.fake))));
  return ops::scale(ops::add(real_term, fake_term), T(0.5));
}

/// 1/2 mean((d_fake - gen)^2).
template <typename T>
Var<T> lsgan_generator_loss(Var<T> d_fake, double gen_target = 1.0) {
  return ops::scale(ops::mean(ops::square(ops::add_scalar(d_fake, static_cast<T>(-gen_target)))), T(0.5));
}

/// mean |a - b|.
template <typename T>
Var<T> l1_loss(Var<T> a, Var<T> b) {
  a.value().require_same_shape(b.value(), "l1_loss");
  return ops::mean(ops::abs(ops::sub(a, b)));
}

/// mean |x - x_rec| + mean |y - y_rec|.
template <typename T>
Var<T> cycle_loss(Var<T> x, Var<T> x_rec, Var<T> y, Var<T> y_rec) {
  return ops::add(l1_loss(x, x_rec), l1_loss(y, y_rec));
}

/// gan_x + gan_y + lambda * cyc.
template <typename T>
Var<T> total_loss(Var<T> gan_x, Var<T> gan_y, Var<T> cyc, double lambda_cyc) {
  if (lambda_cyc < 0.0) throw std::invalid_argument("total_loss: lambda_cyc must be >= 0");
  return ops::add(ops::add(gan_x, gan_y), ops::scale(cyc, static_cast<T>(lambda_cyc)));
}

inline double total_loss(double gan_x, double gan_y, double cyc, double lambda_cyc) {
  if (lambda_cyc < 0.0) throw std::invalid_argument("total_loss: lambda_cyc must be >= 0");
  return gan_x + gan_y + lambda_cyc * cyc;
}

/// Sum of `loss_fn` applied to channel 0 (image) and channel 1 (mask) of
/// every argument. All arguments must have exactly two channels.
template <typename T, typename F>
Var<T> channelwise_loss(F&& loss_fn, const std::vector<Var<T>>& args) {
  if (args.empty()) throw std::invalid_argument("channelwise_loss: no arguments");
  std::vector<Var<T>> image, mask;
  for (const auto& a : args) {
    require_rank4(a.shape(), "channelwise_loss");
    if (a.shape()[1] != 2) {
      throw ShapeError("channelwise_loss: expected 2 channels (image, mask), got " + std::to_string(a.shape()[1]));
    }
    image.push_back(ops::slice_channels(a, 0, 1));
    mask.push_back(ops::slice_channels(a, 1, 1));
  }
  return ops::add(loss_fn(image), loss_fn(mask));
}

}  // namespace cycleaug
