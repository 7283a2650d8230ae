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

// Small CNN image classifier producing a malignancy probability.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cycleaug/adam.hpp"
#include "cycleaug/checkpoint.hpp"
#include "cycleaug/config.hpp"
#include "cycleaug/dataset.hpp"
#include "cycleaug/metrics.hpp"
#include "cycleaug/nn.hpp"

namespace cycleaug {

struct ClassifierConfig {
  std::uint64_t steps = 2000;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  std::uint64_t eval_every = 100;
  std::uint64_t seed = 0;
  std::size_t base_channels = 8;  // blocks use 1x, 2x, 4x
  double leaky_slope = 0.2;
  double threshold = 0.23;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("classifier: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("classifier: lr must be > 0");
    if (eval_every < 1) throw std::invalid_argument("classifier: eval_every must be >= 1");
    if (base_channels < 1) throw std::invalid_argument("classifier: base_channels must be >= 1");
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("clf.steps", steps);
    kv.set("clf.batch_size", std::uint64_t{batch_size});
    kv.set("clf.lr", lr);
    kv.set("clf.eval_every", eval_every);
    kv.set("clf.seed", seed);
    kv.set("clf.base_channels", std::uint64_t{base_channels});
    kv.set("clf.leaky_slope", leaky_slope);
    kv.set("clf.threshold", threshold);
    return kv;
  }

  static ClassifierConfig from_kv(const KeyValues& kv) {
    ClassifierConfig c;
    c.steps = kv.integer("clf.steps");
    c.batch_size = kv.integer("clf.batch_size");
    c.lr = kv.real("clf.lr");
    c.eval_every = kv.integer("clf.eval_every");
    c.seed = kv.integer("clf.seed");
    c.base_channels = kv.integer("clf.base_channels");
    c.leaky_slope = kv.real("clf.leaky_slope");
    c.threshold = kv.real("clf.threshold");
    return c;
  }

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

/// Three stride-2 conv blocks, global average pool, 1x1 head, sigmoid.
template <typename T>
class Classifier {
 public:
  Classifier() = default;

  Classifier(std::size_t height, std::size_t width, const ClassifierConfig& cfg)
      : height_(height), width_(width), cfg_(cfg) {
    cfg_.validate();
    if (height < 8 || width < 8) throw ShapeError("classifier: input must be at least 8x8");
    const Rng root(cfg_.seed);
    std::size_t in = 1;
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t out = cfg_.base_channels << b;
      Rng r = root.split("block" + std::to_string(b));
      params_.add("block" + std::to_string(b) + ".weight", he_init({out, in, 3, 3}, r));
      params_.add("block" + std::to_string(b) + ".bias", Tensor<T>::zeros({out}));
      in = out;
    }
    Rng r = root.split("head");
    params_.add("head.weight", he_init({1, in, 1, 1}, r));
    params_.add("head.bias", Tensor<T>::zeros({1}));
  }

  /// Logits [N, 1, 1, 1] for inputs [N, 1, H, W].
  Var<T> logits(Tape<T>& tape, Var<T> x, bool trainable = true) const {
    const Shape& s = x.shape();
    require_rank4(s, "classifier input");
    if (s[1] != 1 || s[2] != height_ || s[3] != width_) {
      throw ShapeError("classifier: expected [N,1," + std::to_string(height_) + "," + std::to_string(width_) +
                       "] input, got " + shape_str(s));
    }
    Binder<T> bind{tape, trainable};
    for (std::size_t b = 0; b < 3; ++b) {
      const std::string name = "block" + std::to_string(b);
      x = ops::conv2d(x, bind(params_.get(name + ".weight")), 2, Padding::reflect(1));
      x = ops::leaky_relu(ops::add_channel_bias(x, bind(params_.get(name + ".bias"))), static_cast<T>(cfg_.leaky_slope));
    }
    x = ops::conv2d(ops::global_avg_pool(x), bind(params_.get("head.weight")));
    return ops::add_channel_bias(x, bind(params_.get("head.bias")));
  }

  /// Probability of the cancerous class.
  double predict(const Image& img) const {
    if (img.height != height_ || img.width != width_) {
      throw ShapeError("classifier: image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                       ", model expects " + std::to_string(height_) + "x" + std::to_string(width_));
    }
    return predict_batch({&img}).front();
  }

  std::vector<double> predict_batch(const std::vector<const Image*>& imgs) const {
    std::vector<double> out;
    out.reserve(imgs.size());
    for (const Image* img : imgs) {
      Tape<T> tape;
      const Tensor<T> x(Shape{1, 1, img->height, img->width}, std::vector<T>(img->pixels.begin(), img->pixels.end()));
      const T z = logits(tape, tape.constant(x), false).value().item();
      out.push_back(static_cast<double>(ops::sigmoid_scalar(z)));
    }
    return out;
  }

  std::vector<double> scores(const std::vector<ImageSample>& samples) const {
    std::vector<const Image*> imgs;
    for (const auto& s : samples) imgs.push_back(&s.image);
    return predict_batch(imgs);
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  const ClassifierConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }

  Checkpoint to_checkpoint(std::uint64_t step, double auc) const {
    Checkpoint c;
    c.kind = "classifier";
    c.step = step;
    KeyValues kv = cfg_.to_kv();
    kv.set("model.height", std::uint64_t{height_});
    kv.set("model.width", std::uint64_t{width_});
    kv.set("model.best_auc", auc);
    c.config = kv.to_text();
    c.rng = Rng(cfg_.seed);
    for (const auto& e : params_.entries()) c.add(e.name, e.value);
    return c;
  }

  static Classifier from_checkpoint(const Checkpoint& c) {
    if (c.kind != "classifier") throw CheckpointError("checkpoint kind is '" + c.kind + "', expected 'classifier'");
    const KeyValues kv = KeyValues::parse(c.config, "checkpoint config");
    Classifier m(kv.integer("model.height"), kv.integer("model.width"), ClassifierConfig::from_kv(kv));
    for (auto& e : m.params_.entries()) c.restore(e.name, e.value);
    return m;
  }

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  static Tensor<T> he_init(const Shape& s, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(s[1] * s[2] * s[3]));
    return draw_tensor<T>(s, truncated_normal_init(stddev), rng);
  }

  std::size_t height_ = 0, width_ = 0;
  ClassifierConfig cfg_;
  ParameterStore<T> params_;
};

struct ClassifierTrainResult {
  Classifier<float> model;       // parameters at the best evaluation
  std::uint64_t best_step = 0;
  double best_auc = 0.0;
  double final_auc = 0.0;
  std::vector<std::pair<std::uint64_t, double>> history;  // (step, eval AUC)
};

inline std::vector<int> binary_labels(const std::vector<ImageSample>& samples) {
  std::vector<int> y;
  for (const auto& s : samples) y.push_back(s.label == Label::kCancerous ? 1 : 0);
  return y;
}

/// Binary cross-entropy with Adam; keeps the parameters of the evaluation
/// with the highest eval ROC AUC. Ties go to the later evaluation.
inline ClassifierTrainResult train_classifier(const std::vector<ImageSample>& train,
                                              const std::vector<ImageSample>& eval, const ClassifierConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("train_classifier: empty training set");
  if (count_label(train, Label::kHealthy) == 0 || count_label(train, Label::kCancerous) == 0) {
    throw std::invalid_argument("train_classifier: training set must contain both classes");
  }
  if (count_label(eval, Label::kHealthy) == 0 || count_label(eval, Label::kCancerous) == 0) {
    throw std::invalid_argument("train_classifier: evaluation set must contain both classes");
  }
  const std::size_t h = train.front().image.height, w = train.front().image.width;
  for (const auto* set : {&train, &eval}) {
    for (const auto& s : *set) {
      if (s.image.height != h || s.image.width != w) throw ShapeError(s.source_id + ": image dims differ within dataset");
    }
  }
  Classifier<float> model(h, w, cfg);
  std::vector<AdamState<float>> opt;
  for (const auto& e : model.params().entries()) opt.emplace_back(e.value.shape());
  const std::vector<int> eval_labels = binary_labels(eval);
  const auto evaluate = [&] { return roc_auc(model.scores(eval), eval_labels); };

  ClassifierTrainResult result;
  result.best_auc = evaluate();
  result.final_auc = result.best_auc;
  result.model = model;
  result.history.emplace_back(0, result.best_auc);
  const Rng batches = Rng(cfg.seed).split("classifier-batches");
  const std::size_t plane = h * w;
  for (std::uint64_t step = 0; step < cfg.steps; ++step) {
    Rng r = batches.split(step);
    std::vector<float> xb(cfg.batch_size * plane);
    Tensor<float> yb(Shape{cfg.batch_size, 1, 1, 1});
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const ImageSample& s = train[r.below(train.size())];
      std::copy(s.image.pixels.begin(), s.image.pixels.end(), xb.begin() + static_cast<std::ptrdiff_t>(b * plane));
      yb[b] = s.label == Label::kCancerous ? 1.0f : 0.0f;
    }
    Tape<float> tape;
    const Var<float> z = model.logits(tape, tape.constant(Tensor<float>(Shape{cfg.batch_size, 1, h, w}, std::move(xb))));
    const Gradients<float> grads = tape.backward(ops::bce_with_logits(z, yb));
    auto& entries = model.params().entries();
    for (std::size_t i = 0; i < entries.size(); ++i) adam_step(entries[i].value, grads.of(entries[i].value), opt[i], cfg.lr);
    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) {
      const double auc = evaluate();
      result.history.emplace_back(step + 1, auc);
      result.final_auc = auc;
      if (auc >= result.best_auc) {
        result.best_auc = auc;
        result.best_step = step + 1;
        result.model = model;
      }
    }
  }
  return result;
}

}  // namespace cycleaug
