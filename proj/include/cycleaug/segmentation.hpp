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

// Otsu thresholding and connected-component bounding boxes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cycleaug/config.hpp"
#include "cycleaug/image.hpp"

namespace cycleaug {

struct OtsuResult {
  std::size_t bin = 0;   // pixels in bins <= bin are background
  double threshold = 0;  // upper edge of `bin` in pixel units
  double lo = 0, hi = 0;
  std::size_t bins = 256;

  /// Histogram bin of a pixel value.
  std::size_t bin_of(double v) const {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
    return std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t))));
  }
  bool foreground(double v) const { return bin_of(v) > bin; }
};

/// Histogram over the image's own [min, max] range; picks the split that
/// maximizes inter-class variance, comparing exactly in integer arithmetic.
/// Ties go to the lower threshold.
inline OtsuResult otsu(std::span<const float> pixels, std::size_t bins = 256) {
  if (bins < 2) throw std::invalid_argument("otsu: need at least 2 bins");
  if (pixels.empty()) throw std::invalid_argument("otsu: empty image");
  const auto [mn, mx] = std::minmax_element(pixels.begin(), pixels.end());
  OtsuResult r;
  r.lo = *mn;
  r.hi = *mx;
  r.bins = bins;
  if (!(r.hi > r.lo)) throw std::invalid_argument("otsu: constant image has no threshold");
  std::vector<std::int64_t> hist(bins, 0);
  for (float v : pixels) ++hist[r.bin_of(v)];
  std::int64_t n_total = 0, s_total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    n_total += hist[b];
    s_total += hist[b] * static_cast<std::int64_t>(b);
  }
  // Between-class variance is proportional to (s0 n1 - s1 n0)^2 / (n0 n1).
  using i128 = __int128;
  i128 best_num = -1, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (std::size_t t = 0; t + 1 < bins; ++t) {
    n0 += hist[t];
    s0 += hist[t] * static_cast<std::int64_t>(t);
    const std::int64_t n1 = n_total - n0, s1 = s_total - s0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 d = static_cast<i128>(s0) * n1 - static_cast<i128>(s1) * n0;
    const i128 num = d * d, den = static_cast<i128>(n0) * n1;
    if (best_num < 0 || num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      r.bin = t;
    }
  }
  r.threshold = r.lo + static_cast<double>(r.bin + 1) * (r.hi - r.lo) / static_cast<double>(bins);
  return r;
}

inline double otsu_threshold(const Image& img, std::size_t bins = 256) { return otsu(img.pixels, bins).threshold; }

/// Binary foreground mask from a per-image Otsu split.
inline Image otsu_segment(const Image& img, std::size_t bins = 256) {
  const OtsuResult r = otsu(img.pixels, bins);
  Image m(img.height, img.width);
  for (std::size_t i = 0; i < img.size(); ++i) m.pixels[i] = r.foreground(img.pixels[i]) ? 1.0f : 0.0f;
  return m;
}

enum class LesionClass { kMalignant, kBenign };

inline std::string_view to_string(LesionClass c) { return c == LesionClass::kMalignant ? "malignant" : "benign"; }

struct BBox {
  std::size_t x = 0, y = 0, w = 0, h = 0;
  double score = 1.0;
  LesionClass cls = LesionClass::kMalignant;

  std::size_t area() const { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr std::size_t kMinBoxArea = 10;

/// Tight box around every 4-connected foreground region, raster order of
/// first pixel; boxes with area below 10 are dropped.
inline std::vector<BBox> mask_to_bboxes(const Image& mask, LesionClass cls = LesionClass::kMalignant) {
  const std::size_t h = mask.height, w = mask.width;
  std::vector<std::uint8_t> seen(h * w, 0);
  std::vector<BBox> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (seen[start] || mask.pixels[start] < 0.5f) continue;
    std::size_t y0 = h, y1 = 0, x0 = w, x1 = 0;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t y = p / w, x = p % w;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      const auto visit = [&](std::size_t q) {
        if (!seen[q] && mask.pixels[q] >= 0.5f) {
          seen[q] = 1;
          stack.push_back(q);
        }
      };
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
    }
    BBox b{x0, y0, x1 - x0 + 1, y1 - y0 + 1, 1.0, cls};
    if (b.area() >= kMinBoxArea) out.push_back(b);
  }
  return out;
}

inline constexpr const char* kBboxCsvHeader = "source_id,x,y,w,h,score,class";

inline void write_bbox_rows(std::ostream& os, const std::string& source_id, const std::vector<BBox>& boxes) {
  for (const auto& b : boxes) {
    os << source_id << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << ',' << format_double(b.score) << ','
       << to_string(b.cls) << '\n';
  }
}

}  // namespace cycleaug
