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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cycleaug/autodiff.hpp"
#include "cycleaug/ops.hpp"
#include "cycleaug/random.hpp"
#include "cycleaug/tensor.hpp"

namespace cycleaug {

/// Ordered, named parameter tensors of one network.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Tensor<T>& add(std::string name, Tensor<T> value) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    entries_.push_back({std::move(name), std::move(value)});
    return entries_.back().value;
  }

  Tensor<T>* find(std::string_view name) {
    for (auto& e : entries_) {
      if (e.name == name) return &e.value;
    }
    return nullptr;
  }
  const Tensor<T>* find(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e.value;
    }
    return nullptr;
  }

  Tensor<T>& get(std::string_view name) {
    if (auto* p = find(name)) return *p;
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }
  const Tensor<T>& get(std::string_view name) const {
    if (const auto* p = find(name)) return *p;
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Maps parameters onto a tape for one forward pass.
template <typename T>
struct Binder {
  Tape<T>& tape;
  bool trainable = true;

  Var<T> operator()(const Tensor<T>& p) const { return tape.parameter(p, trainable); }
};

using Initializer = std::function<double(Rng&)>;

/// Truncated normal, the GAN-convention default.
inline Initializer truncated_normal_init(double stddev = 0.02) {
  return [stddev](Rng& rng) { return rng.truncated_normal(stddev); };
}

template <typename T>
Tensor<T> draw_tensor(const Shape& shape, const Initializer& init, Rng& rng) {
  Tensor<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(init(rng));
  return t;
}

/// ICNR initialization for a sub-pixel kernel [O, I, kh, kw].
///
/// One kernel of shape [O / r^2, I, kh, kw] is drawn; output channel o holds
/// a copy of drawn channel o / r^2. After a pixel shuffle every r x r output
/// block then comes from identical weights, so the layer is a nearest
/// upsample of a plain convolution at initialization.
template <typename T>
Tensor<T> icnr_init(const Shape& kernel_shape, std::size_t upscale_factor, const Initializer& base_init,
                    std::uint64_t seed) {
  require_rank4(kernel_shape, "icnr_init");
  if (upscale_factor < 1) throw std::invalid_argument("icnr_init: upscale factor must be >= 1");
  const std::size_t r2 = upscale_factor * upscale_factor;
  if (kernel_shape[0] % r2 != 0) {
    throw ShapeError("icnr_init: " + std::to_string(kernel_shape[0]) + " output channels not divisible by " +
                     std::to_string(r2));
  }
  Rng rng(seed);
  Shape sub_shape = kernel_shape;
  sub_shape[0] /= r2;
  const Tensor<T> sub = draw_tensor<T>(sub_shape, base_init, rng);
  if (r2 == 1) return sub;
  Tensor<T> out(kernel_shape);
  const std::size_t per_out = kernel_shape[1] * kernel_shape[2] * kernel_shape[3];
  for (std::size_t o = 0; o < kernel_shape[0]; ++o) {
    const T* src = sub.data().data() + (o / r2) * per_out;
    std::copy(src, src + per_out, out.data().data() + o * per_out);
  }
  return out;
}

/// conv2d(nearest_upsample(x, 2), k) with shape-preserving reflection padding.
template <typename T>
Var<T> resize_conv(Var<T> input, Var<T> kernel) {
  const Shape& ks = kernel.shape();
  require_rank4(ks, "resize_conv kernel");
  if (ks[2] != ks[3] || ks[2] % 2 == 0) throw ShapeError("resize_conv: kernel must be square with odd size");
  return ops::conv2d(ops::nearest_upsample(input, 2), kernel, 1, Padding::reflect(ks[2] / 2));
}

enum class UpsampleBackend { kResizeConv, kDeconv };

inline std::string_view to_string(UpsampleBackend b) {
  return b == UpsampleBackend::kResizeConv ? "resize_conv" : "deconv";
}

inline UpsampleBackend parse_upsample_backend(std::string_view s) {
  if (s == "resize_conv") return UpsampleBackend::kResizeConv;
  if (s == "deconv") return UpsampleBackend::kDeconv;
  throw std::invalid_argument("unknown upsample backend '" + std::string(s) + "'");
}

/// Upsampling-layer kernel from a 1x1 sub-pixel kernel [4 * O, I, 1, 1].
///
/// A 2x transposed convolution (kernel 4, padding 1) routes phase (py, px)
/// of the output through tap (1 + py, 1 + px) at the co-located input pixel,
/// so any sub-pixel kernel embeds exactly. For the resize-conv kernel (3x3
/// after nearest upsampling) only the centre tap is shared by all four
/// phases; the embedding needs the phases to agree, which ICNR guarantees.
template <typename T>
Tensor<T> embed_subpixel_kernel(const Tensor<T>& sub, UpsampleBackend backend) {
  require_rank4(sub.shape(), "embed_subpixel_kernel");
  if (sub.dim(0) % 4 != 0 || sub.dim(2) != 1 || sub.dim(3) != 1) {
    throw ShapeError("embed_subpixel_kernel: expected [4*O, I, 1, 1], got " + shape_str(sub.shape()));
  }
  const std::size_t out_c = sub.dim(0) / 4, in_c = sub.dim(1);
  if (backend == UpsampleBackend::kDeconv) {
    Tensor<T> k(Shape{in_c, out_c, 4, 4});
    for (std::size_t i = 0; i < in_c; ++i) {
      for (std::size_t o = 0; o < out_c; ++o) {
        for (std::size_t py = 0; py < 2; ++py) {
          for (std::size_t px = 0; px < 2; ++px) k.at(i, o, 1 + py, 1 + px) = sub.at(o * 4 + py * 2 + px, i, 0, 0);
        }
      }
    }
    return k;
  }
  Tensor<T> k(Shape{out_c, in_c, 3, 3});
  for (std::size_t o = 0; o < out_c; ++o) {
    for (std::size_t i = 0; i < in_c; ++i) {
      const T v = sub.at(o * 4, i, 0, 0);
      for (std::size_t ph = 1; ph < 4; ++ph) {
        if (sub.at(o * 4 + ph, i, 0, 0) != v) {
          throw std::invalid_argument("embed_subpixel_kernel: resize-conv needs phase-identical sub-kernels");
        }
      }
      k.at(o, i, 1, 1) = v;
    }
  }
  return k;
}

struct ConvShape {
  std::size_t kernel, stride, pad;
};

/// floor((H + 2p - k) / s) + 1, or 0 when the layer does not fit.
inline std::size_t conv_output_size(std::size_t in, ConvShape c, bool reflect) {
  if (reflect && c.pad >= in) return 0;
  if (in + 2 * c.pad < c.kernel) return 0;
  return (in + 2 * c.pad - c.kernel) / c.stride + 1;
}

struct DiscriminatorSpec {
  std::size_t in_channels = 1;
  std::vector<std::size_t> filters{64, 128, 256, 512};
  double width = 1.0;
  std::size_t kernel = 4;
  std::vector<std::size_t> strides{2, 2, 2, 1};
  std::size_t pad = 1;
  double leaky_slope = 0.2;
  bool instance_norm = false;
  double init_stddev = 0.02;

  /// Appendix-sized network scaled down by 8 for CPU training.
  static DiscriminatorSpec desk(std::size_t in_channels = 1) {
    DiscriminatorSpec s;
    s.in_channels = in_channels;
    s.width = 0.125;
    return s;
  }

  std::size_t channels(std::size_t layer) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(filters.at(layer)) * width)));
  }

  /// Spatial size after every layer (body and head); throws if any does not fit.
  std::vector<std::pair<std::size_t, std::size_t>> layer_sizes(std::size_t h, std::size_t w) const {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (std::size_t i = 0; i <= strides.size(); ++i) {
      const ConvShape c{kernel, i < strides.size() ? strides[i] : 1, pad};
      const std::size_t nh = conv_output_size(h, c, true), nw = conv_output_size(w, c, true);
      if (nh == 0 || nw == 0) {
        throw ShapeError("discriminator: input too small, layer " + std::to_string(i) + " receives " +
                         std::to_string(h) + "x" + std::to_string(w));
      }
      h = nh;
      w = nw;
      sizes.emplace_back(h, w);
    }
    return sizes;
  }
};

template <typename T>
class Discriminator {
 public:
  Discriminator() = default;

  Discriminator(DiscriminatorSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    if (spec_.in_channels < 1 || spec_.in_channels > 2) {
      throw std::invalid_argument("discriminator: in_channels must be 1 or 2");
    }
    if (spec_.filters.size() != 4 || spec_.strides.size() != 4 || spec_.strides.back() != 1) {
      throw std::invalid_argument("discriminator: expects 4 body convolutions with final stride 1");
    }
    Rng root(seed);
    const auto init = truncated_normal_init(spec_.init_stddev);
    std::size_t in = spec_.in_channels;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t out = spec_.channels(i);
      const std::string name = "conv" + std::to_string(i);
      Rng r = root.split(name);
      params_.add(name + ".weight", draw_tensor<T>({out, in, spec_.kernel, spec_.kernel}, init, r));
      if (use_norm(i)) {
        params_.add(name + ".gamma", Tensor<T>::ones({out}));
        params_.add(name + ".beta", Tensor<T>::zeros({out}));
      } else {
        params_.add(name + ".bias", Tensor<T>::zeros({out}));
      }
      in = out;
    }
    Rng r = root.split("head");
    params_.add("head.weight", draw_tensor<T>({1, in, spec_.kernel, spec_.kernel}, init, r));
    params_.add("head.bias", Tensor<T>::zeros({1}));
  }

  /// Score map in (0, 1): [N, C, H, W] -> [N, 1, h, w].
  Var<T> forward(Tape<T>& tape, Var<T> x, bool trainable = true) const {
    const Shape& xs = x.shape();
    require_rank4(xs, "discriminator input");
    if (xs[1] != spec_.in_channels) {
      throw ShapeError("discriminator: expected " + std::to_string(spec_.in_channels) + " channels, got " +
                       std::to_string(xs[1]));
    }
    spec_.layer_sizes(xs[2], xs[3]);
    Binder<T> bind{tape, trainable};
    const T slope = static_cast<T>(spec_.leaky_slope);
    for (std::size_t i = 0; i < 4; ++i) {
      const std::string name = "conv" + std::to_string(i);
      x = ops::conv2d(x, bind(params_.get(name + ".weight")), spec_.strides[i], Padding::reflect(spec_.pad));
      if (use_norm(i)) {
        x = ops::instance_norm(x, bind(params_.get(name + ".gamma")), bind(params_.get(name + ".beta")));
      } else {
        x = ops::add_channel_bias(x, bind(params_.get(name + ".bias")));
      }
      x = ops::leaky_relu(x, slope);
    }
    x = ops::conv2d(x, bind(params_.get("head.weight")), 1, Padding::reflect(spec_.pad));
    x = ops::add_channel_bias(x, bind(params_.get("head.bias")));
    return ops::sigmoid(x);
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tape<T> tape;
    return forward(tape, tape.constant(x), false).value();
  }

  const DiscriminatorSpec& spec() const { return spec_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

 private:
  bool use_norm(std::size_t layer) const { return spec_.instance_norm && layer > 0; }

  DiscriminatorSpec spec_;
  ParameterStore<T> params_;
};

struct GeneratorSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::vector<std::size_t> filters{64, 128};  // the two stride-2 stages
  double width = 1.0;
  std::size_t res_blocks = 9;
  std::size_t kernel = 3;
  UpsampleBackend upsample_backend = UpsampleBackend::kResizeConv;
  bool icnr = true;
  bool instance_norm = true;
  double init_stddev = 0.02;

  static GeneratorSpec desk(std::size_t channels = 1) {
    GeneratorSpec s;
    s.in_channels = s.out_channels = channels;
    s.width = 0.125;
    s.res_blocks = 3;
    return s;
  }

  std::size_t channels(std::size_t stage) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(filters.at(stage)) * width)));
  }
};

/// Two stride-2 convolutions, residual blocks, two 2x upsampling layers, tanh.
template <typename T>
class Generator {
 public:
  Generator() = default;

  Generator(GeneratorSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    if (spec_.filters.size() != 2) throw std::invalid_argument("generator: expects two downsampling stages");
    if (spec_.kernel % 2 == 0) throw std::invalid_argument("generator: kernel size must be odd");
    Rng root(seed);
    const auto init = truncated_normal_init(spec_.init_stddev);
    const std::size_t c0 = spec_.channels(0), c1 = spec_.channels(1);
    add_conv(root, "down0", spec_.in_channels, c0, init, true);
    add_conv(root, "down1", c0, c1, init, true);
    for (std::size_t b = 0; b < spec_.res_blocks; ++b) {
      add_conv(root, "res" + std::to_string(b) + ".conv0", c1, c1, init, true);
      add_conv(root, "res" + std::to_string(b) + ".conv1", c1, c1, init, true);
    }
    add_upsample(root, "up0", c1, c0, true);
    add_upsample(root, "up1", c0, spec_.out_channels, false);
  }

  Var<T> forward(Tape<T>& tape, Var<T> x, bool trainable = true) const {
    const Shape& xs = x.shape();
    require_rank4(xs, "generator input");
    if (xs[1] != spec_.in_channels) {
      throw ShapeError("generator: expected " + std::to_string(spec_.in_channels) + " channels, got " +
                       std::to_string(xs[1]));
    }
    if (xs[2] % 4 != 0 || xs[3] % 4 != 0) {
      throw ShapeError("generator: spatial dims " + std::to_string(xs[2]) + "x" + std::to_string(xs[3]) +
                       " must be divisible by 4");
    }
    if (xs[2] < 8 || xs[3] < 8) throw ShapeError("generator: spatial dims must be at least 8");
    Binder<T> bind{tape, trainable};
    const Padding pad = Padding::reflect(spec_.kernel / 2);
    x = ops::relu(conv_block(bind, "down0", x, 2, pad));
    x = ops::relu(conv_block(bind, "down1", x, 2, pad));
    for (std::size_t b = 0; b < spec_.res_blocks; ++b) {
      const std::string name = "res" + std::to_string(b);
      Var<T> h = ops::relu(conv_block(bind, name + ".conv0", x, 1, pad));
      h = conv_block(bind, name + ".conv1", h, 1, pad);
      x = ops::add(x, h);
    }
    x = ops::relu(upsample_block(bind, "up0", x));
    return ops::tanh(upsample_block(bind, "up1", x));
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tape<T> tape;
    return forward(tape, tape.constant(x), false).value();
  }

  const GeneratorSpec& spec() const { return spec_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

 private:
  void add_conv(const Rng& root, const std::string& name, std::size_t in, std::size_t out, const Initializer& init,
                bool normed) {
    Rng r = root.split(name);
    params_.add(name + ".weight", draw_tensor<T>({out, in, spec_.kernel, spec_.kernel}, init, r));
    add_affine(name, out, normed);
  }

  void add_affine(const std::string& name, std::size_t out, bool normed) {
    if (normed && spec_.instance_norm) {
      params_.add(name + ".gamma", Tensor<T>::ones({out}));
      params_.add(name + ".beta", Tensor<T>::zeros({out}));
    } else {
      params_.add(name + ".bias", Tensor<T>::zeros({out}));
    }
  }

  void add_upsample(const Rng& root, const std::string& name, std::size_t in, std::size_t out, bool normed) {
    const auto init = truncated_normal_init(spec_.init_stddev);
    Tensor<T> w;
    if (spec_.icnr) {
      const std::uint64_t seed = root.split(name).next_u64();
      w = embed_subpixel_kernel(icnr_init<T>({4 * out, in, 1, 1}, 2, init, seed), spec_.upsample_backend);
    } else {
      Rng r = root.split(name);
      w = spec_.upsample_backend == UpsampleBackend::kDeconv
              ? draw_tensor<T>({in, out, 4, 4}, init, r)
              : draw_tensor<T>({out, in, spec_.kernel, spec_.kernel}, init, r);
    }
    params_.add(name + ".weight", std::move(w));
    add_affine(name, out, normed);
  }

  Var<T> affine(const Binder<T>& bind, const std::string& name, Var<T> x) const {
    if (const auto* g = params_.find(name + ".gamma")) {
      return ops::instance_norm(x, bind(*g), bind(params_.get(name + ".beta")));
    }
    return ops::add_channel_bias(x, bind(params_.get(name + ".bias")));
  }

  Var<T> conv_block(const Binder<T>& bind, const std::string& name, Var<T> x, std::size_t stride,
                    Padding pad) const {
    return affine(bind, name, ops::conv2d(x, bind(params_.get(name + ".weight")), stride, pad));
  }

  Var<T> upsample_block(const Binder<T>& bind, const std::string& name, Var<T> x) const {
    const Var<T> w = bind(params_.get(name + ".weight"));
    Var<T> y = spec_.upsample_backend == UpsampleBackend::kDeconv ? ops::conv_transpose2d(x, w, 2, 1)
                                                                 : resize_conv(x, w);
    return affine(bind, name, y);
  }

  GeneratorSpec spec_;
  ParameterStore<T> params_;
};

/// Fraction of AC spectral power in the Nyquist row and column bands.
///
/// The bands are the frequencies k with |2k - N| <= 1 along each axis, which
/// for even sizes is the single bin N/2. Row-band power uses Parseval along
/// the other axis, so the cost is O(H * W) per band bin.
template <typename T>
double checkerboard_energy(std::span<const T> image, std::size_t height, std::size_t width) {
  if (height < 2 || width < 2) throw ShapeError("checkerboard_energy: image must be at least 2x2");
  if (image.size() != height * width) throw ShapeError("checkerboard_energy: size does not match dims");
  const auto band = [](std::size_t n) {
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < n; ++k) {
      const auto d = static_cast<std::ptrdiff_t>(2 * k) - static_cast<std::ptrdiff_t>(n);
      if (d >= -1 && d <= 1) ks.push_back(k);
    }
    return ks;
  };
  const auto twiddle = [](std::size_t k, std::size_t i, std::size_t n) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>((k * i) % n) / static_cast<double>(n);
    return std::pair{std::cos(a), std::sin(a)};
  };
  double sum = 0.0, sumsq = 0.0;
  for (T v : image) {
    sum += static_cast<double>(v);
    sumsq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double n = static_cast<double>(height * width);
  const double total_ac = n * sumsq - sum * sum;
  if (!(total_ac > 0.0)) return 0.0;

  const auto ky_band = band(height), kx_band = band(width);
  double band_power = 0.0;
  // Row band: project columns onto frequency ky, then Parseval over x.
  std::vector<std::vector<std::pair<double, double>>> row_proj;
  for (std::size_t ky : ky_band) {
    std::vector<std::pair<double, double>> r(width, {0.0, 0.0});
    for (std::size_t y = 0; y < height; ++y) {
      const auto [c, s] = twiddle(ky, y, height);
      for (std::size_t x = 0; x < width; ++x) {
        const double v = static_cast<double>(image[y * width + x]);
        r[x].first += v * c;
        r[x].second += v * s;
      }
    }
    double p = 0.0;
    for (const auto& [re, im] : r) p += re * re + im * im;
    band_power += static_cast<double>(width) * p;
    row_proj.push_back(std::move(r));
  }
  for (std::size_t kx : kx_band) {
    double p = 0.0;
    for (std::size_t y = 0; y < height; ++y) {
      double re = 0.0, im = 0.0;
      for (std::size_t x = 0; x < width; ++x) {
        const auto [c, s] = twiddle(kx, x, width);
        const double v = static_cast<double>(image[y * width + x]);
        re += v * c;
        im += v * s;
      }
      p += re * re + im * im;
    }
    band_power += static_cast<double>(height) * p;
  }
  // Corner bins were counted in both bands.
  for (std::size_t i = 0; i < ky_band.size(); ++i) {
    for (std::size_t kx : kx_band) {
      double re = 0.0, im = 0.0;
      for (std::size_t x = 0; x < width; ++x) {
        const auto [c, s] = twiddle(kx, x, width);
        const auto [a, b] = row_proj[i][x];
        re += a * c - b * s;
        im += a * s + b * c;
      }
      band_power -= re * re + im * im;
    }
  }
  return std::clamp(band_power / total_ac, 0.0, 1.0);
}

template <typename T>
double checkerboard_energy(const Tensor<T>& image) {
  const Shape& s = image.shape();
  if (s.size() < 2) throw ShapeError("checkerboard_energy: need at least 2 dims");
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  if (image.numel() != h * w) throw ShapeError("checkerboard_energy: expects a single-channel image");
  return checkerboard_energy<T>(image.data(), h, w);
}

}  // namespace cycleaug
