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

// Test-only reference implementations. Nothing here calls into the library's
// numeric code paths; each oracle recomputes its quantity from the definition.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "cycleaug/autodiff.hpp"
#include "cycleaug/random.hpp"
#include "cycleaug/tensor.hpp"

namespace oracle {

using cycleaug::Shape;
using cycleaug::Tensor;

enum class Pad { kNone, kZero, kReflect };

/// Value of x[n][c] at a possibly out-of-range (y, x) under the given border rule.
template <typename T>
T padded_at(const Tensor<T>& x, std::size_t n, std::size_t c, long y, long xx, Pad pad) {
  const long h = static_cast<long>(x.dim(2)), w = static_cast<long>(x.dim(3));
  if (y < 0 || y >= h || xx < 0 || xx >= w) {
    if (pad != Pad::kReflect) return T{0};
    while (y < 0 || y >= h) y = y < 0 ? -y : 2 * h - 2 - y;
    while (xx < 0 || xx >= w) xx = xx < 0 ? -xx : 2 * w - 2 - xx;
  }
  return x.at(n, c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
}

/// Direct nested-loop convolution: out[n,o,i,j] = sum x_pad[n,c,i*s+u,j*s+v] k[o,c,u,v].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, std::size_t stride, std::size_t p, Pad pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * p - kh) / stride + 1, ow = (w + 2 * p - kw) / stride + 1;
  Tensor<T> out(Shape{n, o, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          T acc{0};
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long y = static_cast<long>(i * stride + u) - static_cast<long>(p);
                const long xx = static_cast<long>(j * stride + v) - static_cast<long>(p);
                acc += padded_at(x, b, ic, y, xx, pad) * k.at(oc, ic, u, v);
              }
          out.at(b, oc, i, j) = acc;
        }
  return out;
}

/// Transposed convolution by direct scatter: out[2i+u-p] += x[i] k[u].
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& k, std::size_t stride, std::size_t p) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t co = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h - 1) * stride + kh - 2 * p, ow = (w - 1) * stride + kw - 2 * p;
  Tensor<T> out(Shape{n, co, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < ci; ++a)
      for (std::size_t o = 0; o < co; ++o)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long y = static_cast<long>(i * stride + u) - static_cast<long>(p);
                const long xx = static_cast<long>(j * stride + v) - static_cast<long>(p);
                if (y < 0 || xx < 0 || y >= static_cast<long>(oh) || xx >= static_cast<long>(ow)) continue;
                out.at(b, o, static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) +=
                    x.at(b, a, i, j) * k.at(a, o, u, v);
              }
  return out;
}

/// Full 2-D DFT power spectrum |F(ky, kx)|^2 by direct summation.
inline std::vector<double> dft_power(const std::vector<double>& img, std::size_t h, std::size_t w) {
  std::vector<double> power(h * w);
  for (std::size_t ky = 0; ky < h; ++ky)
    for (std::size_t kx = 0; kx < w; ++kx) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double a = -2.0 * std::numbers::pi *
                           (static_cast<double>(ky * y) / static_cast<double>(h) +
                            static_cast<double>(kx * x) / static_cast<double>(w));
          acc += img[y * w + x] * std::polar(1.0, a);
        }
      power[ky * w + kx] = std::norm(acc);
    }
  return power;
}

/// Nyquist-band share of AC power from the full spectrum.
inline double checkerboard_fraction(const std::vector<double>& img, std::size_t h, std::size_t w) {
  const auto p = dft_power(img, h, w);
  const auto in_band = [](std::size_t k, std::size_t n) {
    const long d = 2 * static_cast<long>(k) - static_cast<long>(n);
    return d >= -1 && d <= 1;
  };
  double band = 0.0, ac = 0.0;
  for (std::size_t ky = 0; ky < h; ++ky)
    for (std::size_t kx = 0; kx < w; ++kx) {
      if (ky == 0 && kx == 0) continue;
      ac += p[ky * w + kx];
      if (in_band(ky, h) || in_band(kx, w)) band += p[ky * w + kx];
    }
  return ac > 0.0 ? band / ac : 0.0;
}

/// Relative gradient error ||a - n|| / max(||a||, ||n||) against central differences.
struct GradCheck {
  double max_rel_error = 0.0;
};

/// `loss` builds a scalar from Vars bound to the given tensors. Every input is
/// treated as a parameter; central differences perturb each entry by +-h.
inline GradCheck check_gradients(
    std::vector<Tensor<double>> inputs,
    const std::function<cycleaug::Var<double>(cycleaug::Tape<double>&, const std::vector<cycleaug::Var<double>>&)>&
        loss,
    double h = 1e-5, std::size_t max_entries_per_input = 0) {
  using cycleaug::Tape;
  using cycleaug::Var;
  const auto eval = [&](const std::vector<Tensor<double>>& in) {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& t : in) vars.push_back(tape.constant(t));
    return loss(tape, vars).value().item();
  };
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  const auto grads = tape.backward(loss(tape, vars));

  GradCheck result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor<double> analytic = grads.of(inputs[i]);
    std::size_t count = inputs[i].numel();
    std::size_t stride = 1;
    if (max_entries_per_input && count > max_entries_per_input) stride = count / max_entries_per_input;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < count; j += stride) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i][j] += h;
      minus[i][j] -= h;
      const double numeric = (eval(plus) - eval(minus)) / (2.0 * h);
      diff2 += (analytic[j] - numeric) * (analytic[j] - numeric);
      a2 += analytic[j] * analytic[j];
      n2 += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
  }
  return result;
}

/// Sign of every input to a kinked op (relu, leaky_relu, abs) on the tape.
inline std::vector<bool> kink_pattern(const cycleaug::Tape<double>& tape) {
  std::vector<bool> pattern;
  for (std::size_t i = 0; i < tape.size(); ++i) {
    const auto& n = tape.node(i);
    if (n.op != "relu" && n.op != "leaky_relu" && n.op != "abs") continue;
    for (double v : tape.node(n.inputs.at(0)).value.data()) pattern.push_back(v > 0.0);
  }
  return pattern;
}

struct ParameterGradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // the +-h interval crossed a kink
};

/// Same check for a loss over network parameters held outside the tape.
/// `loss` must bind the tensors in `params` on the tape it is given. Entries
/// whose +-h perturbation flips the side of any kink are skipped. Gradients
/// that vanish by symmetry (a shift removed by a later instance norm) are
/// compared against `floor` instead of their own tiny norm.
inline ParameterGradCheck check_parameter_gradients(
    const std::vector<Tensor<double>*>& params,
    const std::function<cycleaug::Var<double>(cycleaug::Tape<double>&)>& loss, double h = 1e-5,
    std::size_t max_entries_per_param = 0, double floor = 1e-4) {
  cycleaug::Tape<double> tape;
  const auto grads = tape.backward(loss(tape));
  const std::vector<bool> base = kink_pattern(tape);
  const auto eval = [&](bool& crossed) {
    cycleaug::Tape<double> t;
    const double v = loss(t).value().item();
    crossed = crossed || kink_pattern(t) != base;
    return v;
  };
  ParameterGradCheck result;
  for (Tensor<double>* p : params) {
    const Tensor<double> analytic = grads.of(*p);
    const std::size_t count = p->numel();
    std::size_t stride = 1;
    if (max_entries_per_param && count > max_entries_per_param) stride = count / max_entries_per_param;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < count; j += stride) {
      const double saved = (*p)[j];
      bool crossed = false;
      (*p)[j] = saved + h;
      const double up = eval(crossed);
      (*p)[j] = saved - h;
      const double down = eval(crossed);
      (*p)[j] = saved;
      if (crossed) {
        ++result.skipped;
        continue;
      }
      ++result.checked;
      const double numeric = (up - down) / (2.0 * h);
      diff2 += (analytic[j] - numeric) * (analytic[j] - numeric);
      a2 += analytic[j] * analytic[j];
      n2 += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), floor});
    result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
  }
  return result;
}

inline Tensor<double> random_tensor(const Shape& shape, cycleaug::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Random values kept at least `margin` away from zero (for kinked activations).
inline Tensor<double> random_away_from_zero(const Shape& shape, cycleaug::Rng& rng, double margin = 1e-2) {
  Tensor<double> t(shape);
  for (double& v : t.data()) {
    const double m = rng.uniform(margin, 2.0);
    v = rng.bernoulli(0.5) ? m : -m;
  }
  return t;
}

/// Brute-force Otsu: for each of the 255 splits of a 256-bin histogram over
/// [min, max], recount both classes from the pixels and score w0 w1 (m0 - m1)^2.
/// Returns the lowest maximizing bin.
inline std::size_t otsu_exhaustive(const std::vector<float>& px) {
  float lo = px[0], hi = px[0];
  for (float v : px) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<std::size_t> bin(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double t = std::floor((static_cast<double>(px[i]) - lo) / (static_cast<double>(hi) - lo) * 256.0);
    bin[i] = static_cast<std::size_t>(std::clamp(t, 0.0, 255.0));
  }
  std::size_t best = 0;
  long double best_score = -1.0L;
  for (std::size_t t = 0; t < 255; ++t) {
    long double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (std::size_t b : bin) {
      if (b <= t) {
        n0 += 1;
        s0 += b;
      } else {
        n1 += 1;
        s1 += b;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const long double d = s0 / n0 - s1 / n1;
    const long double score = n0 * n1 * d * d;
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  return best;
}

/// Pairwise AUC: P(score_pos > score_neg) + 0.5 P(equal), over all pairs.
inline double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
  long double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) wins += 0.5L;
    }
  }
  return static_cast<double>(wins / pairs);
}

}  // namespace oracle
