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
#include <cstddef>
#include <stdexcept>
#include <string>

#include "cycleaug/autodiff.hpp"
#include "cycleaug/kernels.hpp"
#include "cycleaug/tensor.hpp"

namespace cycleaug {

using kernels::PadMode;

/// Spatial padding for a convolution: mode and border width.
struct Padding {
  PadMode mode = PadMode::kNone;
  std::size_t size = 0;

  static Padding none() { return {PadMode::kNone, 0}; }
  static Padding zero(std::size_t p) { return {PadMode::kZero, p}; }
  static Padding reflect(std::size_t p) { return {PadMode::kReflect, p}; }
};

namespace ops {

namespace detail {

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, const char* what) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(what) + ": operands on different tapes");
}

template <typename T, typename F, typename G>
Var<T> unary(Var<T> a, std::string_view name, F forward, G derivative) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = forward(x[i]);
  const std::size_t ia = a.id;
  return a.tape->record(name, {ia}, std::move(y), [ia, derivative](Tape<T>& t, std::size_t self) {
    const Tensor<T>& x = t.value(ia);
    const Tensor<T>& yv = t.value(self);
    const Tensor<T>& g = t.grad(self);
    Tensor<T> gx(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] = g[i] * derivative(x[i], yv[i]);
    t.accumulate(ia, gx);
  });
}

}  // namespace detail

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b, "add");
  a.value().require_same_shape(b.value(), "add");
  Tensor<T> y = a.value();
  y += b.value();
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("add", {ia, ib}, std::move(y), [ia, ib](Tape<T>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b, "sub");
  a.value().require_same_shape(b.value(), "sub");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = av[i] - bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("sub", {ia, ib}, std::move(y), [ia, ib](Tape<T>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self));
    Tensor<T> neg = t.grad(self);
    neg *= T{-1};
    t.accumulate(ib, neg);
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::require_same_tape(a, b, "mul");
  a.value().require_same_shape(b.value(), "mul");
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  Tensor<T> y(av.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = av[i] * bv[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record("mul", {ia, ib}, std::move(y), [ia, ib](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& av = t.value(ia);
    const Tensor<T>& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor<T> ga(av.shape());
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] = g[i] * bv[i];
      t.accumulate(ia, ga);
    }
    if (t.requires_grad(ib)) {
      Tensor<T> gb(bv.shape());
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] = g[i] * av[i];
      t.accumulate(ib, gb);
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tensor<T> y = a.value();
  y *= s;
  const std::size_t ia = a.id;
  return a.tape->record("scale", {ia}, std::move(y), [ia, s](Tape<T>& t, std::size_t self) {
    Tensor<T> g = t.grad(self);
    g *= s;
    t.accumulate(ia, g);
  });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T s) {
  Tensor<T> y = a.value();
  for (T& v : y.data()) v += s;
  const std::size_t ia = a.id;
  return a.tape->record("add_scalar", {ia}, std::move(y),
                        [ia](Tape<T>& t, std::size_t self) { t.accumulate(ia, t.grad(self)); });
}

template <typename T>
Var<T> sum(Var<T> a) {
  const std::size_t ia = a.id;
  return a.tape->record("sum", {ia}, Tensor<T>::scalar(a.value().sum()), [ia](Tape<T>& t, std::size_t self) {
    t.accumulate(ia, Tensor<T>(t.value(ia).shape(), t.grad(self).item()));
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const std::size_t ia = a.id;
  const T n = static_cast<T>(a.value().numel());
  return a.tape->record("mean", {ia}, Tensor<T>::scalar(a.value().sum() / n),
                        [ia, n](Tape<T>& t, std::size_t self) {
                          t.accumulate(ia, Tensor<T>(t.value(ia).shape(), t.grad(self).item() / n));
                        });
}

template <typename T>
Var<T> square(Var<T> a) {
  return detail::unary(a, "square", [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

/// |x| with subgradient 0 at the kink.
template <typename T>
Var<T> abs(Var<T> a) {
  return detail::unary(
      a, "abs", [](T x) { return std::abs(x); },
      [](T x, T) { return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}); });
}

template <typename T>
Var<T> relu(Var<T> a) {
  return detail::unary(
      a, "relu", [](T x) { return x > T{0} ? x : T{0}; }, [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

/// max(slope * x, x) for 0 < slope < 1.
template <typename T>
Var<T> leaky_relu(Var<T> a, T slope = T(0.2)) {
  return detail::unary(
      a, "leaky_relu", [slope](T x) { return x > T{0} ? x : slope * x; },
      [slope](T x, T) { return x > T{0} ? T{1} : slope; });
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  return detail::unary(
      a, "sigmoid", [](T x) { return sigmoid_scalar(x); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  return detail::unary(
      a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> pad2d(Var<T> a, Padding pad) {
  if (pad.size == 0 || pad.mode == PadMode::kNone) return a;
  const Shape xs = a.shape();
  const std::size_t ia = a.id;
  return a.tape->record(pad.mode == PadMode::kReflect ? "reflection_pad" : "zero_pad", {ia},
                        kernels::pad2d(a.value(), pad.size, pad.mode), [ia, xs, pad](Tape<T>& t, std::size_t self) {
                          t.accumulate(ia, kernels::pad2d_grad(t.grad(self), xs, pad.size, pad.mode));
                        });
}

template <typename T>
Var<T> reflection_pad(Var<T> a, std::size_t p) {
  return pad2d(a, Padding::reflect(p));
}

template <typename T>
Var<T> nearest_upsample(Var<T> a, std::size_t factor) {
  if (factor < 1) throw std::invalid_argument("nearest_upsample: factor must be >= 1");
  const Shape xs = a.shape();
  const std::size_t ia = a.id;
  return a.tape->record("nearest_upsample", {ia}, kernels::nearest_upsample(a.value(), factor),
                        [ia, xs, factor](Tape<T>& t, std::size_t self) {
                          t.accumulate(ia, kernels::nearest_upsample_grad(t.grad(self), xs, factor));
                        });
}

/// Cross-correlation of NCHW input with an OIHW kernel.
template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, std::size_t stride = 1, Padding pad = Padding::none()) {
  detail::require_same_tape(input, kernel, "conv2d");
  require_rank4(input.shape(), "conv2d input");
  require_rank4(kernel.shape(), "conv2d kernel");
  if (input.shape()[1] != kernel.shape()[1]) {
    throw ShapeError("conv2d: input has " + std::to_string(input.shape()[1]) + " channels but kernel expects " +
                     std::to_string(kernel.shape()[1]));
  }
  Var<T> padded = pad2d(input, pad);
  const std::size_t ix = padded.id, ik = kernel.id;
  return input.tape->record(
      "conv2d", {ix, ik}, kernels::conv2d_valid(padded.value(), kernel.value(), stride),
      [ix, ik, stride](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad(self);
        if (t.requires_grad(ix)) {
          t.accumulate(ix, kernels::conv2d_valid_grad_input(g, t.value(ik), t.value(ix).shape(), stride));
        }
        if (t.requires_grad(ik)) {
          t.accumulate(ik, kernels::conv2d_valid_grad_kernel(g, t.value(ix), t.value(ik).shape(), stride));
        }
      });
}

/// Transposed convolution; kernel layout is [in_channels, out_channels, kh, kw].
/// Output size is (H - 1) * stride + kh - 2 * pad.
template <typename T>
Var<T> conv_transpose2d(Var<T> input, Var<T> kernel, std::size_t stride, std::size_t pad) {
  detail::require_same_tape(input, kernel, "conv_transpose2d");
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  require_rank4(xs, "conv_transpose2d input");
  require_rank4(ks, "conv_transpose2d kernel");
  if (xs[1] != ks[0]) {
    throw ShapeError("conv_transpose2d: input has " + std::to_string(xs[1]) + " channels but kernel expects " +
                     std::to_string(ks[0]));
  }
  if (stride == 0) throw ShapeError("conv_transpose2d: stride must be positive");
  const Shape full{xs[0], ks[1], (xs[2] - 1) * stride + ks[2], (xs[3] - 1) * stride + ks[3]};
  Tensor<T> y = kernels::crop2d(kernels::conv2d_valid_grad_input(input.value(), kernel.value(), full, stride), pad);
  const std::size_t ix = input.id, ik = kernel.id;
  return input.tape->record(
      "conv_transpose2d", {ix, ik}, std::move(y), [ix, ik, stride, pad](Tape<T>& t, std::size_t self) {
        const Tensor<T> gfull = kernels::pad2d(t.grad(self), pad, PadMode::kZero);
        if (t.requires_grad(ix)) t.accumulate(ix, kernels::conv2d_valid(gfull, t.value(ik), stride));
        if (t.requires_grad(ik)) {
          t.accumulate(ik, kernels::conv2d_valid_grad_kernel(t.value(ix), gfull, t.value(ik).shape(), stride));
        }
      });
}

/// Adds bias[c] to every element of channel c.
template <typename T>
Var<T> add_channel_bias(Var<T> input, Var<T> bias) {
  detail::require_same_tape(input, bias, "add_channel_bias");
  const Shape& xs = input.shape();
  require_rank4(xs, "add_channel_bias");
  if (bias.value().numel() != xs[1]) {
    throw ShapeError("add_channel_bias: bias has " + std::to_string(bias.value().numel()) + " entries for " +
                     std::to_string(xs[1]) + " channels");
  }
  const std::size_t plane = xs[2] * xs[3];
  Tensor<T> y = input.value();
  const Tensor<T>& b = bias.value();
  for (std::size_t n = 0; n < xs[0]; ++n) {
    for (std::size_t c = 0; c < xs[1]; ++c) {
      T* p = y.data().data() + (n * xs[1] + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += b[c];
    }
  }
  const std::size_t ix = input.id, ib = bias.id;
  return input.tape->record("add_channel_bias", {ix, ib}, std::move(y), [ix, ib, xs, plane](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    t.accumulate(ix, g);
    if (t.requires_grad(ib)) {
      Tensor<T> gb(Shape{xs[1]});
      for (std::size_t n = 0; n < xs[0]; ++n) {
        for (std::size_t c = 0; c < xs[1]; ++c) {
          const T* p = g.data().data() + (n * xs[1] + c) * plane;
          T acc{0};
          for (std::size_t i = 0; i < plane; ++i) acc += p[i];
          gb[c] += acc;
        }
      }
      t.accumulate(ib, gb);
    }
  });
}

/// Per-sample, per-channel standardization followed by a channel affine map.
template <typename T>
Var<T> instance_norm(Var<T> input, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  const Shape xs = input.shape();
  require_rank4(xs, "instance_norm");
  if (gamma.value().numel() != xs[1] || beta.value().numel() != xs[1]) {
    throw ShapeError("instance_norm: affine parameters must have one entry per channel");
  }
  const std::size_t plane = xs[2] * xs[3];
  const std::size_t groups = xs[0] * xs[1];
  const Tensor<T>& x = input.value();
  const Tensor<T>& gm = gamma.value();
  const Tensor<T>& bt = beta.value();
  Tensor<T> y(xs);
  Tensor<T> xhat(xs);
  std::vector<T> inv_std(groups);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const std::size_t c = gi % xs[1];
    const T* p = x.data().data() + gi * plane;
    T mu{0};
    for (std::size_t i = 0; i < plane; ++i) mu += p[i];
    mu /= static_cast<T>(plane);
    T var{0};
    for (std::size_t i = 0; i < plane; ++i) var += (p[i] - mu) * (p[i] - mu);
    var /= static_cast<T>(plane);
    const T is = T{1} / std::sqrt(var + eps);
    inv_std[gi] = is;
    T* h = xhat.data().data() + gi * plane;
    T* o = y.data().data() + gi * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      h[i] = (p[i] - mu) * is;
      o[i] = gm[c] * h[i] + bt[c];
    }
  }
  const std::size_t ix = input.id, ig = gamma.id, ib = beta.id;
  return input.tape->record(
      "instance_norm", {ix, ig, ib}, std::move(y),
      [ix, ig, ib, xs, plane, groups, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t,
                                                                                            std::size_t self) {
        const Tensor<T>& g = t.grad(self);
        const Tensor<T>& gm = t.value(ig);
        Tensor<T> gx(xs);
        Tensor<T> ggamma(Shape{xs[1]});
        Tensor<T> gbeta(Shape{xs[1]});
        const T m = static_cast<T>(plane);
        for (std::size_t gi = 0; gi < groups; ++gi) {
          const std::size_t c = gi % xs[1];
          const T* gp = g.data().data() + gi * plane;
          const T* h = xhat.data().data() + gi * plane;
          T sum_g{0}, sum_gh{0};
          for (std::size_t i = 0; i < plane; ++i) {
            sum_g += gp[i];
            sum_gh += gp[i] * h[i];
          }
          ggamma[c] += sum_gh;
          gbeta[c] += sum_g;
          const T k = gm[c] * inv_std[gi];
          T* out = gx.data().data() + gi * plane;
          for (std::size_t i = 0; i < plane; ++i) out[i] = k * (gp[i] - sum_g / m - h[i] * sum_gh / m);
        }
        t.accumulate(ix, gx);
        t.accumulate(ig, ggamma);
        t.accumulate(ib, gbeta);
      });
}

/// Channels [begin, begin + count) of an NCHW tensor.
template <typename T>
Var<T> slice_channels(Var<T> input, std::size_t begin, std::size_t count) {
  const Shape xs = input.shape();
  require_rank4(xs, "slice_channels");
  if (count == 0 || begin + count > xs[1]) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + std::to_string(xs[1]) + " channels");
  }
  const std::size_t plane = xs[2] * xs[3];
  Tensor<T> y(Shape{xs[0], count, xs[2], xs[3]});
  for (std::size_t n = 0; n < xs[0]; ++n) {
    const T* src = input.value().data().data() + (n * xs[1] + begin) * plane;
    std::copy(src, src + count * plane, y.data().data() + n * count * plane);
  }
  const std::size_t ix = input.id;
  return input.tape->record("slice_channels", {ix}, std::move(y),
                            [ix, xs, begin, count, plane](Tape<T>& t, std::size_t self) {
                              const Tensor<T>& g = t.grad(self);
                              Tensor<T> gx(xs);
                              for (std::size_t n = 0; n < xs[0]; ++n) {
                                const T* src = g.data().data() + n * count * plane;
                                std::copy(src, src + count * plane, gx.data().data() + (n * xs[1] + begin) * plane);
                              }
                              t.accumulate(ix, gx);
                            });
}

/// Mean over the spatial dims: [N,C,H,W] -> [N,C,1,1].
template <typename T>
Var<T> global_avg_pool(Var<T> input) {
  const Shape xs = input.shape();
  require_rank4(xs, "global_avg_pool");
  const std::size_t plane = xs[2] * xs[3];
  Tensor<T> y(Shape{xs[0], xs[1], 1, 1});
  for (std::size_t gi = 0; gi < xs[0] * xs[1]; ++gi) {
    const T* p = input.value().data().data() + gi * plane;
    T acc{0};
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    y[gi] = acc / static_cast<T>(plane);
  }
  const std::size_t ix = input.id;
  return input.tape->record("global_avg_pool", {ix}, std::move(y), [ix, xs, plane](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> gx(xs);
    for (std::size_t gi = 0; gi < xs[0] * xs[1]; ++gi) {
      T* p = gx.data().data() + gi * plane;
      const T v = g[gi] / static_cast<T>(plane);
      for (std::size_t i = 0; i < plane; ++i) p[i] = v;
    }
    t.accumulate(ix, gx);
  });
}

/// Mean binary cross-entropy of sigmoid(logits) against fixed targets,
/// evaluated in the overflow-free form max(z,0) - z*t + log(1 + exp(-|z|)).
template <typename T>
Var<T> bce_with_logits(Var<T> logits, const Tensor<T>& targets) {
  const Tensor<T>& z = logits.value();
  if (z.numel() != targets.numel()) {
    throw ShapeError("bce_with_logits: " + std::to_string(z.numel()) + " logits vs " +
                     std::to_string(targets.numel()) + " targets");
  }
  T acc{0};
  for (std::size_t i = 0; i < z.numel(); ++i) {
    acc += std::max(z[i], T{0}) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
  }
  const T n = static_cast<T>(z.numel());
  const std::size_t iz = logits.id;
  return logits.tape->record("bce_with_logits", {iz}, Tensor<T>::scalar(acc / n),
                             [iz, targets, n](Tape<T>& t, std::size_t self) {
                               const Tensor<T>& z = t.value(iz);
                               const T g = t.grad(self).item();
                               Tensor<T> gz(z.shape());
                               for (std::size_t i = 0; i < z.numel(); ++i) {
                                 gz[i] = g * (sigmoid_scalar(z[i]) - targets[i]) / n;
                               }
                               t.accumulate(iz, gz);
                             });
}

}  // namespace ops

template <typename T>
Var<T> operator+(Var<T> a, Var<T> b) {
  return ops::add(a, b);
}
template <typename T>
Var<T> operator-(Var<T> a, Var<T> b) {
  return ops::sub(a, b);
}
template <typename T>
Var<T> operator*(Var<T> a, Var<T> b) {
  return ops::mul(a, b);
}
template <typename T>
Var<T> operator*(T s, Var<T> a) {
  return ops::scale(a, s);
}

}  // namespace cycleaug
