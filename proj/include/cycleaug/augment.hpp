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

// Training-set balancing: GAN conversion and the classic geometric baseline.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cycleaug/dataset.hpp"

namespace cycleaug {

struct AugmentPolicy {
  double translate_frac = 0.1;  // of each image dimension
  double rotate_deg = 15.0;
  double flip_prob = 0.5;
};

/// One concrete geometric transform: flip, then rotate about the centre, then shift.
struct RigidTransform {
  std::int64_t dy = 0;
  std::int64_t dx = 0;
  double angle_deg = 0.0;
  bool flip = false;
};

inline RigidTransform draw_transform(Rng& rng, const AugmentPolicy& policy, std::size_t h, std::size_t w) {
  const auto ty = static_cast<std::int64_t>(std::llround(policy.translate_frac * static_cast<double>(h)));
  const auto tx = static_cast<std::int64_t>(std::llround(policy.translate_frac * static_cast<double>(w)));
  RigidTransform t;
  t.dy = rng.integer(-ty, ty);
  t.dx = rng.integer(-tx, tx);
  t.angle_deg = rng.uniform(-policy.rotate_deg, policy.rotate_deg);
  t.flip = rng.bernoulli(policy.flip_prob);
  return t;
}

namespace detail {

/// Source coordinate of output pixel (y, x) under the inverse transform.
inline std::pair<double, double> inverse_map(const RigidTransform& t, std::size_t h, std::size_t w, double y, double x) {
  y -= static_cast<double>(t.dy);
  x -= static_cast<double>(t.dx);
  if (t.angle_deg != 0.0) {
    const double cy = 0.5 * static_cast<double>(h - 1), cx = 0.5 * static_cast<double>(w - 1);
    const double a = -t.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double ry = y - cy, rx = x - cx;
    y = cy + c * ry + s * rx;
    x = cx - s * ry + c * rx;
  }
  if (t.flip) x = static_cast<double>(w - 1) - x;
  return {y, x};
}

inline float sample_bilinear_reflect(const Image& img, double y, double x) {
  const auto H = static_cast<std::ptrdiff_t>(img.height), W = static_cast<std::ptrdiff_t>(img.width);
  const double fy = std::floor(y), fx = std::floor(x);
  const double ty = y - fy, tx = x - fx;
  const auto y0 = static_cast<std::ptrdiff_t>(fy), x0 = static_cast<std::ptrdiff_t>(fx);
  const auto at = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
    return static_cast<double>(img.at(static_cast<std::size_t>(reflect_index(yy, H)), static_cast<std::size_t>(reflect_index(xx, W))));
  };
  if (ty == 0.0 && tx == 0.0) return static_cast<float>(at(y0, x0));
  const double top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
  const double bot = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
  return static_cast<float>(top * (1.0 - ty) + bot * ty);
}

inline float sample_nearest_reflect(const Image& img, double y, double x) {
  const auto H = static_cast<std::ptrdiff_t>(img.height), W = static_cast<std::ptrdiff_t>(img.width);
  const auto yy = reflect_index(static_cast<std::ptrdiff_t>(std::llround(y)), H);
  const auto xx = reflect_index(static_cast<std::ptrdiff_t>(std::llround(x)), W);
  return img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
}

}  // namespace detail

/// Applies `t` to image (bilinear) and mask (nearest), both with reflected borders.
inline ImageSample apply_transform(const ImageSample& s, const RigidTransform& t) {
  s.validate();
  ImageSample out = s;
  const std::size_t h = s.image.height, w = s.image.width;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto [sy, sx] = detail::inverse_map(t, h, w, static_cast<double>(y), static_cast<double>(x));
      out.image.at(y, x) = detail::sample_bilinear_reflect(s.image, sy, sx);
      if (s.mask) out.mask->at(y, x) = detail::sample_nearest_reflect(*s.mask, sy, sx);
    }
  out.provenance = Provenance::kClassicAugmented;
  return out;
}

/// One randomly transformed copy of `s`.
inline ImageSample classic_augment(const ImageSample& s, Rng& rng, const AugmentPolicy& policy = {}) {
  ImageSample out = apply_transform(s, draw_transform(rng, policy, s.image.height, s.image.width));
  out.source_id = s.source_id + "-aug";
  return out;
}

/// Adds one classic copy of a cancerous sample per healthy sample, cycling
/// through the cancerous ones, so class counts match GAN balancing.
inline std::vector<ImageSample> balance_with_classic(const std::vector<ImageSample>& train, Rng rng,
                                                     const AugmentPolicy& policy = {}) {
  std::vector<const ImageSample*> cancerous;
  for (const auto& s : train) {
    if (s.label == Label::kCancerous) cancerous.push_back(&s);
  }
  std::vector<ImageSample> out = train;
  if (cancerous.empty()) return out;
  const std::size_t n_healthy = count_label(train, Label::kHealthy);
  for (std::size_t i = 0; i < n_healthy; ++i) {
    ImageSample a = classic_augment(*cancerous[i % cancerous.size()], rng, policy);
    a.source_id += std::to_string(i);
    out.push_back(std::move(a));
  }
  return out;
}

/// Anything that can translate a sample and reports how far it was trained.
template <typename M>
concept Translator = requires(const M& m, const ImageSample& s) {
  { m.trained_steps() } -> std::convertible_to<std::uint64_t>;
  { m.translate(s, Direction::kXtoY) } -> std::convertible_to<ImageSample>;
};

/// Appends the healthy-to-cancerous translation of every healthy sample.
template <Translator M>
std::vector<ImageSample> balance_with_gan(const std::vector<ImageSample>& train, const M& model) {
  if (model.trained_steps() == 0) throw std::invalid_argument("balance_with_gan: model has not been trained");
  std::vector<ImageSample> out = train;
  for (const auto& s : train) {
    if (s.label == Label::kHealthy) out.push_back(model.translate(s, Direction::kXtoY));
  }
  return out;
}

}  // namespace cycleaug
