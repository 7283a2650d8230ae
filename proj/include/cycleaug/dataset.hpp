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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cycleaug/image.hpp"
#include "cycleaug/random.hpp"

namespace cycleaug {

enum class Label { kHealthy, kCancerous };
enum class Provenance { kReal, kGanGenerated, kClassicAugmented };

inline std::string_view to_string(Label l) { return l == Label::kHealthy ? "healthy" : "cancerous"; }

inline Label parse_label(std::string_view s) {
  if (s == "healthy") return Label::kHealthy;
  if (s == "cancerous") return Label::kCancerous;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

inline Label opposite(Label l) { return l == Label::kHealthy ? Label::kCancerous : Label::kHealthy; }

/// Translation direction; domain X is healthy, domain Y cancerous.
enum class Direction { kXtoY, kYtoX };

inline std::string_view to_string(Direction d) { return d == Direction::kXtoY ? "x2y" : "y2x"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "x2y" || s == "healthy2cancerous") return Direction::kXtoY;
  if (s == "y2x" || s == "cancerous2healthy") return Direction::kYtoX;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

inline Label source_label(Direction d) { return d == Direction::kXtoY ? Label::kHealthy : Label::kCancerous; }

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kReal: return "real";
    case Provenance::kGanGenerated: return "gan_generated";
    case Provenance::kClassicAugmented: return "classic_augmented";
  }
  return "real";
}

/// Grayscale image in [-1, 1] with an optional binary lesion mask.
struct ImageSample {
  Image image;
  std::optional<Image> mask;
  Label label = Label::kHealthy;
  std::string source_id;
  Provenance provenance = Provenance::kReal;

  void validate() const {
    if (image.size() == 0) throw std::invalid_argument(source_id + ": empty image");
    if (mask && !mask->same_dims(image)) throw std::invalid_argument(source_id + ": mask dims differ from image");
  }

  friend bool operator==(const ImageSample&, const ImageSample&) = default;
};

/// Subject key used for grouping: the source id up to the first '-'.
inline std::string group_key(std::string_view source_id) {
  return std::string(source_id.substr(0, source_id.find('-')));
}

inline std::size_t count_label(const std::vector<ImageSample>& samples, Label label) {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const ImageSample& s) { return s.label == label; }));
}

// ---------------------------------------------------------------------------
// Synthetic lesion data

struct SynthConfig {
  std::size_t n_healthy = 100;
  std::size_t n_cancerous = 100;
  std::size_t height = 32;
  std::size_t width = 32;
  double radius_min = 3.0;
  double radius_max = 6.0;
  double brightness_delta = 0.6;
  double texture_scale = 3.0;  // blur sigma of the background noise, pixels
  double texture_contrast = 0.05;
  double base_level = -0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (radius_min < 2.0 || radius_max < radius_min) throw std::invalid_argument("synth: radii must satisfy 2 <= min <= max");
    if (height < 8 || width < 8) throw std::invalid_argument("synth: image must be at least 8x8");
    if (2.0 * radius_max + 2.0 > static_cast<double>(std::min(height, width))) {
      throw std::invalid_argument("synth: lesion radius too large for image size");
    }
    if (texture_scale <= 0.0) throw std::invalid_argument("synth: texture scale must be positive");
  }
};

struct Ellipse {
  double cy = 0, cx = 0, ry = 0, rx = 0, theta = 0;

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = (dx * c + dy * s) / rx, v = (-dx * s + dy * c) / ry;
    return u * u + v * v <= 1.0;
  }
};

struct SynthRecord {
  ImageSample sample;
  std::optional<Ellipse> lesion;
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const auto r = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

/// Separable Gaussian blur with reflected borders.
inline std::vector<double> blur(const std::vector<double>& src, std::size_t h, std::size_t w, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const auto r = static_cast<std::ptrdiff_t>(k.size() / 2);
  std::vector<double> tmp(h * w), out(h * w);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * src[y * W + reflect_index(x + i, W)];
      tmp[y * W + x] = acc;
    }
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp[reflect_index(y + i, H) * W + x];
      out[y * W + x] = acc;
    }
  return out;
}

}  // namespace detail

/// Smoothed noise background; cancerous samples add one bright ellipse.
///
/// Every sample draws from its own stream, keyed by label and index, so a
/// sample does not depend on how many others are requested.
inline std::vector<SynthRecord> synth_generate_records(const SynthConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  std::vector<SynthRecord> out;
  const auto make = [&](Label label, std::size_t index) {
    const std::string id = (label == Label::kHealthy ? "h" : "c") + std::to_string(100000 + index).substr(1);
    Rng rng = root.split(id);
    const std::size_t h = cfg.height, w = cfg.width;
    std::vector<double> noise(h * w);
    for (double& v : noise) v = rng.normal();
    auto tex = detail::blur(noise, h, w, cfg.texture_scale);
    double mean = 0.0, var = 0.0;
    for (double v : tex) mean += v;
    mean /= static_cast<double>(tex.size());
    for (double v : tex) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(tex.size()));
    SynthRecord rec;
    rec.sample.label = label;
    rec.sample.source_id = id;
    rec.sample.image = Image(h, w);
    rec.sample.mask = Image(h, w);
    if (label == Label::kCancerous) {
      Ellipse e;
      e.ry = rng.uniform(cfg.radius_min, cfg.radius_max);
      e.rx = rng.uniform(cfg.radius_min, cfg.radius_max);
      const double m = std::max(e.ry, e.rx);
      e.cy = rng.uniform(m, static_cast<double>(h - 1) - m);
      e.cx = rng.uniform(m, static_cast<double>(w - 1) - m);
      e.theta = rng.uniform(0.0, std::numbers::pi);
      rec.lesion = e;
    }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double v = cfg.base_level + cfg.texture_contrast * (tex[y * w + x] - mean) / sd;
        if (rec.lesion && rec.lesion->contains(static_cast<double>(y), static_cast<double>(x))) {
          v += cfg.brightness_delta;
          rec.sample.mask->at(y, x) = 1.0f;
        }
        rec.sample.image.at(y, x) = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
    out.push_back(std::move(rec));
  };
  for (std::size_t i = 0; i < cfg.n_cancerous; ++i) make(Label::kCancerous, i);
  for (std::size_t i = 0; i < cfg.n_healthy; ++i) make(Label::kHealthy, i);
  return out;
}

inline std::vector<ImageSample> synth_generate(const SynthConfig& cfg) {
  std::vector<ImageSample> out;
  for (auto& r : synth_generate_records(cfg)) out.push_back(std::move(r.sample));
  return out;
}

/// Lesion score: brightest disc mean minus the image median.
inline double brightness_score(const Image& img, double radius) {
  std::vector<float> sorted = img.pixels;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const auto r = static_cast<std::ptrdiff_t>(std::floor(radius));
  std::vector<std::pair<std::ptrdiff_t, std::ptrdiff_t>> offsets;
  for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
    for (std::ptrdiff_t dx = -r; dx <= r; ++dx)
      if (static_cast<double>(dy * dy + dx * dx) <= radius * radius) offsets.emplace_back(dy, dx);
  const auto H = static_cast<std::ptrdiff_t>(img.height), W = static_cast<std::ptrdiff_t>(img.width);
  double best = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (auto [dy, dx] : offsets) {
        acc += img.pixels[static_cast<std::size_t>(detail::reflect_index(y + dy, H) * W + detail::reflect_index(x + dx, W))];
      }
      best = std::max(best, acc / static_cast<double>(offsets.size()));
    }
  return best - median;
}

/// Decision rule matched to a synthetic config: lesion iff score > delta / 2.
struct BrightnessOracle {
  double radius = 3.0;
  double threshold = 0.3;

  static BrightnessOracle for_config(const SynthConfig& cfg) { return {cfg.radius_min, 0.5 * cfg.brightness_delta}; }

  double score(const Image& img) const { return brightness_score(img, radius); }
  bool is_cancerous(const Image& img) const { return score(img) > threshold; }
};

// ---------------------------------------------------------------------------
// On-disk layout: <root>/<label>/<id>.png plus optional <id>_mask.png

inline void write_dataset(const std::filesystem::path& root, const std::vector<ImageSample>& samples) {
  namespace fs = std::filesystem;
  for (Label l : {Label::kHealthy, Label::kCancerous}) {
    std::error_code ec;
    fs::create_directories(root / std::string(to_string(l)), ec);
    if (ec) throw ImageIoError((root / std::string(to_string(l))).string() + ": " + ec.message());
  }
  for (const auto& s : samples) {
    s.validate();
    const fs::path dir = root / std::string(to_string(s.label));
    write_png(dir / (s.source_id + ".png"), signed_to_gray8(s.image));
    if (s.mask) write_png(dir / (s.source_id + "_mask.png"), mask_to_gray8(*s.mask));
  }
}

struct LoadOptions {
  std::size_t height = 256;
  std::size_t width = 204;
};

/// Reads both label folders, resizing to the target size; sorted by source id.
inline std::vector<ImageSample> load_dataset(const std::filesystem::path& root, const LoadOptions& opt = {},
                                             std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ImageIoError(root.string() + ": dataset directory not found");
  std::vector<ImageSample> out;
  for (Label l : {Label::kHealthy, Label::kCancerous}) {
    const fs::path dir = root / std::string(to_string(l));
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const auto ext = e.path().extension().string();
      const auto stem = e.path().stem().string();
      if ((ext == ".png" || ext == ".pgm") && !stem.ends_with("_mask")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ImageSample s;
      s.label = l;
      s.source_id = f.stem().string();
      s.image = resize_bilinear(gray8_to_signed(read_gray8(f)), opt.height, opt.width);
      fs::path mask_path = f.parent_path() / (s.source_id + "_mask" + f.extension().string());
      if (fs::exists(mask_path)) {
        s.mask = resize_mask(gray8_to_mask(read_gray8(mask_path)), opt.height, opt.width);
      } else {
        s.mask = Image(opt.height, opt.width);
        if (l == Label::kCancerous && warnings) warnings->push_back(f.string() + ": no mask, using an empty one");
      }
      out.push_back(std::move(s));
    }
  }
  if (out.empty()) throw ImageIoError(root.string() + ": empty dataset");
  std::sort(out.begin(), out.end(), [](const ImageSample& a, const ImageSample& b) { return a.source_id < b.source_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct DatasetSplit {
  std::vector<ImageSample> train;
  std::vector<ImageSample> eval;
  std::vector<ImageSample> test;
  std::uint64_t seed = 0;
};

/// Seeded shuffle of subject groups, then fill train up to round(frac * n).
/// A group that would overshoot goes to eval. Input order is kept within each part.
inline DatasetSplit split(const std::vector<ImageSample>& samples, double train_frac, std::uint64_t seed) {
  if (samples.empty()) throw std::invalid_argument("split: no samples");
  if (!(train_frac >= 0.0 && train_frac <= 1.0)) throw std::invalid_argument("split: fraction outside [0, 1]");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[group_key(samples[i].source_id)].push_back(i);
  std::vector<const std::vector<std::size_t>*> order;
  for (const auto& [k, v] : groups) order.push_back(&v);
  Rng rng = Rng(seed).split("split");
  rng.shuffle(order.begin(), order.end());
  const auto target = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(samples.size())));
  std::vector<bool> in_train(samples.size(), false);
  std::size_t n_train = 0;
  for (const auto* g : order) {
    if (n_train + g->size() <= target) {
      for (std::size_t i : *g) in_train[i] = true;
      n_train += g->size();
    }
  }
  DatasetSplit out;
  out.seed = seed;
  for (std::size_t i = 0; i < samples.size(); ++i) (in_train[i] ? out.train : out.eval).push_back(samples[i]);
  return out;
}

}  // namespace cycleaug
