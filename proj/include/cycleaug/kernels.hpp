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

// Raw NCHW kernels used by the differentiable ops. All loops run in a fixed
// order so results are bit-reproducible.

#pragma once

#include <cstddef>
#include <string>

#include "cycleaug/tensor.hpp"

namespace cycleaug::kernels {

enum class PadMode { kNone, kZero, kReflect };

struct ConvGeometry {
  std::size_t n, c, h, w;      // input
  std::size_t o, kh, kw;       // kernel
  std::size_t stride;
  std::size_t oh, ow;          // output

  static ConvGeometry make(const Shape& x, const Shape& k, std::size_t stride) {
    require_rank4(x, "conv2d input");
    require_rank4(k, "conv2d kernel");
    if (stride == 0) throw ShapeError("conv2d: stride must be positive");
    if (x[1] != k[1]) {
      throw ShapeError("conv2d: input has " + std::to_string(x[1]) + " channels but kernel expects " +
                       std::to_string(k[1]) + " (input " + shape_str(x) + ", kernel " + shape_str(k) + ")");
    }
    if (k[2] > x[2] || k[3] > x[3]) {
      throw ShapeError("conv2d: kernel " + shape_str(k) + " does not fit padded input " + shape_str(x));
    }
    ConvGeometry g{x[0], x[1], x[2], x[3], k[0], k[2], k[3], stride, 0, 0};
    g.oh = (g.h - g.kh) / stride + 1;
    g.ow = (g.w - g.kw) / stride + 1;
    return g;
  }
};

/// Valid cross-correlation: out[n,o] = sum_c x[n,c] * k[o,c].
template <typename T>
Tensor<T> conv2d_valid(const Tensor<T>& x, const Tensor<T>& k, std::size_t stride) {
  const auto g = ConvGeometry::make(x.shape(), k.shape(), stride);
  Tensor<T> out(Shape{g.n, g.o, g.oh, g.ow});
  const T* xp = x.data().data();
  const T* kp = k.data().data();
  T* op = out.data().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.o; ++o) {
      T* oplane = op + (n * g.o + o) * g.oh * g.ow;
      for (std::size_t c = 0; c < g.c; ++c) {
        const T* xplane = xp + (n * g.c + c) * g.h * g.w;
        const T* kplane = kp + (o * g.c + c) * g.kh * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const T wv = kplane[ky * g.kw + kx];
            for (std::size_t oy = 0; oy < g.oh; ++oy) {
              const T* in = xplane + (oy * stride + ky) * g.w + kx;
              T* orow = oplane + oy * g.ow;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < g.ow; ++ox) orow[ox] += wv * in[ox];
              } else {
                for (std::size_t ox = 0; ox < g.ow; ++ox) orow[ox] += wv * in[ox * stride];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

/// Adjoint of conv2d_valid with respect to its input.
template <typename T>
Tensor<T> conv2d_valid_grad_input(const Tensor<T>& gout, const Tensor<T>& k, const Shape& x_shape,
                                  std::size_t stride) {
  const auto g = ConvGeometry::make(x_shape, k.shape(), stride);
  Tensor<T> gx(x_shape);
  const T* gp = gout.data().data();
  const T* kp = k.data().data();
  T* xp = gx.data().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.o; ++o) {
      const T* gplane = gp + (n * g.o + o) * g.oh * g.ow;
      for (std::size_t c = 0; c < g.c; ++c) {
        T* xplane = xp + (n * g.c + c) * g.h * g.w;
        const T* kplane = kp + (o * g.c + c) * g.kh * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const T wv = kplane[ky * g.kw + kx];
            for (std::size_t oy = 0; oy < g.oh; ++oy) {
              T* in = xplane + (oy * stride + ky) * g.w + kx;
              const T* grow = gplane + oy * g.ow;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < g.ow; ++ox) in[ox] += wv * grow[ox];
              } else {
                for (std::size_t ox = 0; ox < g.ow; ++ox) in[ox * stride] += wv * grow[ox];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

/// Gradient of conv2d_valid with respect to its kernel.
template <typename T>
Tensor<T> conv2d_valid_grad_kernel(const Tensor<T>& gout, const Tensor<T>& x, const Shape& k_shape,
                                   std::size_t stride) {
  const auto g = ConvGeometry::make(x.shape(), k_shape, stride);
  Tensor<T> gk(k_shape);
  const T* gp = gout.data().data();
  const T* xp = x.data().data();
  T* kp = gk.data().data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.o; ++o) {
      const T* gplane = gp + (n * g.o + o) * g.oh * g.ow;
      for (std::size_t c = 0; c < g.c; ++c) {
        const T* xplane = xp + (n * g.c + c) * g.h * g.w;
        T* kplane = kp + (o * g.c + c) * g.kh * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            T acc{0};
            for (std::size_t oy = 0; oy < g.oh; ++oy) {
              const T* in = xplane + (oy * stride + ky) * g.w + kx;
              const T* grow = gplane + oy * g.ow;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < g.ow; ++ox) acc += grow[ox] * in[ox];
              } else {
                for (std::size_t ox = 0; ox < g.ow; ++ox) acc += grow[ox] * in[ox * stride];
              }
            }
            kplane[ky * g.kw + kx] += acc;
          }
        }
      }
    }
  }
  return gk;
}

/// Source index for a padded coordinate; -1 means the zero border.
inline std::ptrdiff_t pad_source(std::ptrdiff_t i, std::ptrdiff_t n, PadMode mode) {
  if (i >= 0 && i < n) return i;
  if (mode == PadMode::kZero) return -1;
  // Mirror about the edge pixel, which is not repeated.
  if (i < 0) return -i;
  return 2 * (n - 1) - i;
}

template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, std::size_t p, PadMode mode) {
  require_rank4(x.shape(), "pad2d");
  if (p == 0 || mode == PadMode::kNone) return x;
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (mode == PadMode::kReflect && (p >= h || p >= w)) {
    throw ShapeError("reflection pad " + std::to_string(p) + " too large for spatial size " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t ph = h + 2 * p, pw = w + 2 * p;
  Tensor<T> out(Shape{n, c, ph, pw});
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const T* src = x.data().data() + nc * h * w;
    T* dst = out.data().data() + nc * ph * pw;
    for (std::size_t y = 0; y < ph; ++y) {
      const auto sy = pad_source(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(p),
                                 static_cast<std::ptrdiff_t>(h), mode);
      if (sy < 0) continue;
      for (std::size_t xx = 0; xx < pw; ++xx) {
        const auto sx = pad_source(static_cast<std::ptrdiff_t>(xx) - static_cast<std::ptrdiff_t>(p),
                                   static_cast<std::ptrdiff_t>(w), mode);
        if (sx < 0) continue;
        dst[y * pw + xx] = src[sy * static_cast<std::ptrdiff_t>(w) + sx];
      }
    }
  }
  return out;
}

/// Adjoint of pad2d: folds border gradients back onto their source pixels.
template <typename T>
Tensor<T> pad2d_grad(const Tensor<T>& gout, const Shape& x_shape, std::size_t p, PadMode mode) {
  if (p == 0 || mode == PadMode::kNone) return gout;
  const std::size_t n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
  const std::size_t ph = h + 2 * p, pw = w + 2 * p;
  Tensor<T> gx(x_shape);
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const T* src = gout.data().data() + nc * ph * pw;
    T* dst = gx.data().data() + nc * h * w;
    for (std::size_t y = 0; y < ph; ++y) {
      const auto sy = pad_source(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(p),
                                 static_cast<std::ptrdiff_t>(h), mode);
      if (sy < 0) continue;
      for (std::size_t xx = 0; xx < pw; ++xx) {
        const auto sx = pad_source(static_cast<std::ptrdiff_t>(xx) - static_cast<std::ptrdiff_t>(p),
                                   static_cast<std::ptrdiff_t>(w), mode);
        if (sx < 0) continue;
        dst[sy * static_cast<std::ptrdiff_t>(w) + sx] += src[y * pw + xx];
      }
    }
  }
  return gx;
}

/// Removes `p` rows/columns from every spatial border.
template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, std::size_t p) {
  if (p == 0) return x;
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (2 * p >= h || 2 * p >= w) throw ShapeError("crop2d: crop larger than tensor");
  const std::size_t oh = h - 2 * p, ow = w - 2 * p;
  Tensor<T> out(Shape{n, c, oh, ow});
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    for (std::size_t y = 0; y < oh; ++y) {
      const T* src = x.data().data() + (nc * h + y + p) * w + p;
      std::copy(src, src + ow, out.data().data() + (nc * oh + y) * ow);
    }
  }
  return out;
}

template <typename T>
Tensor<T> nearest_upsample(const Tensor<T>& x, std::size_t f) {
  require_rank4(x.shape(), "nearest_upsample");
  if (f == 1) return x;
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out(Shape{n, c, h * f, w * f});
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const T* src = x.data().data() + nc * h * w;
    T* dst = out.data().data() + nc * h * w * f * f;
    for (std::size_t y = 0; y < h * f; ++y) {
      for (std::size_t xx = 0; xx < w * f; ++xx) dst[y * w * f + xx] = src[(y / f) * w + xx / f];
    }
  }
  return out;
}

/// Adjoint of replication: each source pixel receives its block sum.
template <typename T>
Tensor<T> nearest_upsample_grad(const Tensor<T>& gout, const Shape& x_shape, std::size_t f) {
  if (f == 1) return gout;
  const std::size_t n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
  Tensor<T> gx(x_shape);
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const T* src = gout.data().data() + nc * h * w * f * f;
    T* dst = gx.data().data() + nc * h * w;
    for (std::size_t y = 0; y < h * f; ++y) {
      for (std::size_t xx = 0; xx < w * f; ++xx) dst[(y / f) * w + xx / f] += src[y * w * f + xx];
    }
  }
  return gx;
}

}  // namespace cycleaug::kernels
