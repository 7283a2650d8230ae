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

// Two generators and two discriminators trained with least-squares
// adversarial losses and cycle consistency.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cycleaug/adam.hpp"
#include "cycleaug/checkpoint.hpp"
#include "cycleaug/config.hpp"
#include "cycleaug/dataset.hpp"
#include "cycleaug/losses.hpp"
#include "cycleaug/nn.hpp"

namespace cycleaug {

/// Architecture of the four networks.
struct CycleGanConfig {
  GeneratorSpec generator = GeneratorSpec::desk();
  DiscriminatorSpec discriminator = DiscriminatorSpec::desk();
  bool with_mask = false;
  std::size_t height = 32;
  std::size_t width = 32;

  static CycleGanConfig desk(bool with_mask = false, std::size_t h = 32, std::size_t w = 32) {
    CycleGanConfig c;
    const std::size_t ch = with_mask ? 2 : 1;
    c.generator = GeneratorSpec::desk(ch);
    c.discriminator = DiscriminatorSpec::desk(ch);
    c.with_mask = with_mask;
    c.height = h;
    c.width = w;
    return c;
  }

  std::size_t channels() const { return with_mask ? 2 : 1; }

  void validate() const {
    const std::size_t ch = channels();
    if (generator.in_channels != ch || generator.out_channels != ch || discriminator.in_channels != ch) {
      throw std::invalid_argument("cyclegan: network channels must be " + std::to_string(ch));
    }
    if (height % 4 != 0 || width % 4 != 0) throw std::invalid_argument("cyclegan: image dims must be divisible by 4");
    discriminator.layer_sizes(height, width);
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("model.with_mask", with_mask);
    kv.set("model.height", std::uint64_t{height});
    kv.set("model.width", std::uint64_t{width});
    kv.set("generator.filters", std::to_string(generator.filters[0]) + "," + std::to_string(generator.filters[1]));
    kv.set("generator.width", generator.width);
    kv.set("generator.res_blocks", std::uint64_t{generator.res_blocks});
    kv.set("generator.kernel", std::uint64_t{generator.kernel});
    kv.set("generator.upsample_backend", std::string(to_string(generator.upsample_backend)));
    kv.set("generator.icnr", generator.icnr);
    kv.set("generator.instance_norm", generator.instance_norm);
    kv.set("generator.init_stddev", generator.init_stddev);
    std::string f;
    for (std::size_t i = 0; i < discriminator.filters.size(); ++i) f += (i ? "," : "") + std::to_string(discriminator.filters[i]);
    kv.set("discriminator.filters", f);
    kv.set("discriminator.width", discriminator.width);
    kv.set("discriminator.instance_norm", discriminator.instance_norm);
    kv.set("discriminator.init_stddev", discriminator.init_stddev);
    return kv;
  }

  static CycleGanConfig from_kv(const KeyValues& kv) {
    CycleGanConfig c = desk(kv.boolean("model.with_mask"), kv.integer("model.height"), kv.integer("model.width"));
    const auto gf = kv.integers("generator.filters");
    if (gf.size() != 2) throw ConfigError("generator.filters: expected two values");
    c.generator.filters = {gf[0], gf[1]};
    c.generator.width = kv.real("generator.width");
    c.generator.res_blocks = kv.integer("generator.res_blocks");
    c.generator.kernel = kv.integer("generator.kernel");
    c.generator.upsample_backend = parse_upsample_backend(kv.str("generator.upsample_backend"));
    c.generator.icnr = kv.boolean("generator.icnr");
    c.generator.instance_norm = kv.boolean("generator.instance_norm");
    c.generator.init_stddev = kv.real("generator.init_stddev");
    const auto df = kv.integers("discriminator.filters");
    c.discriminator.filters.assign(df.begin(), df.end());
    c.discriminator.width = kv.real("discriminator.width");
    c.discriminator.instance_norm = kv.boolean("discriminator.instance_norm");
    c.discriminator.init_stddev = kv.real("discriminator.init_stddev");
    return c;
  }
};

struct TrainConfig {
  double lambda_cyc = 10.0;
  double lr_discriminator = 1e-4;
  double lr_generator = 2e-4;
  std::uint64_t steps = 2000;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  LsganTargets targets;
  AdamHyper adam;
  std::uint64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const {
    if (!(lr_discriminator > 0.0) || !(lr_generator > 0.0)) throw std::invalid_argument("train: learning rates must be > 0");
    if (!(lambda_cyc >= 0.0)) throw std::invalid_argument("train: lambda_cyc must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("train.lambda_cyc", lambda_cyc);
    kv.set("train.lr_discriminator", lr_discriminator);
    kv.set("train.lr_generator", lr_generator);
    kv.set("train.steps", steps);
    kv.set("train.batch_size", std::uint64_t{batch_size});
    kv.set("train.seed", seed);
    kv.set("train.real_target", targets.real);
    kv.set("train.fake_target", targets.fake);
    kv.set("train.gen_target", targets.gen);
    kv.set("train.adam_beta1", adam.beta1);
    kv.set("train.adam_beta2", adam.beta2);
    kv.set("train.adam_epsilon", adam.epsilon);
    kv.set("train.checkpoint_every", checkpoint_every);
    return kv;
  }

  static TrainConfig from_kv(const KeyValues& kv) {
    TrainConfig t;
    t.lambda_cyc = kv.real("train.lambda_cyc");
    t.lr_discriminator = kv.real("train.lr_discriminator");
    t.lr_generator = kv.real("train.lr_generator");
    t.steps = kv.integer("train.steps");
    t.batch_size = kv.integer("train.batch_size");
    t.seed = kv.integer("train.seed");
    t.targets = {kv.real("train.real_target"), kv.real("train.fake_target"), kv.real("train.gen_target")};
    t.adam = {kv.real("train.adam_beta1"), kv.real("train.adam_beta2"), kv.real("train.adam_epsilon")};
    t.checkpoint_every = kv.integer("train.checkpoint_every");
    return t;
  }
};

struct LossRecord {
  std::uint64_t step = 0;
  double loss_d_x = 0.0;
  double loss_d_y = 0.0;
  double loss_g_adv = 0.0;
  double loss_cyc = 0.0;
  double loss_total = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

inline constexpr const char* kLossCsvHeader = "step,loss_d_x,loss_d_y,loss_g_adv,loss_cyc,loss_total";

inline std::string to_csv_row(const LossRecord& r) {
  return std::to_string(r.step) + "," + format_double(r.loss_d_x) + "," + format_double(r.loss_d_y) + "," +
         format_double(r.loss_g_adv) + "," + format_double(r.loss_cyc) + "," + format_double(r.loss_total);
}

/// Non-finite value during training. Carries what was known at the failure.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& stage, LossRecord record, const std::string& cause)
      : NumericError("training diverged at step " + std::to_string(record.step) + " (" + stage + "): " + cause),
        stage_(stage),
        record_(record) {}

  const std::string& stage() const { return stage_; }
  const LossRecord& record() const { return record_; }

 private:
  std::string stage_;
  LossRecord record_;
};

/// Adam states for every entry of one parameter store.
template <typename T>
struct Optimizer {
  std::vector<AdamState<T>> states;

  Optimizer() = default;
  Optimizer(const ParameterStore<T>& params, AdamHyper hyper) {
    for (const auto& e : params.entries()) states.emplace_back(e.value.shape(), hyper);
  }

  void step(ParameterStore<T>& params, const Gradients<T>& grads, double lr) {
    auto& entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      adam_step(entries[i].value, grads.of(entries[i].value), states[i], lr);
    }
  }

  friend bool operator==(const Optimizer&, const Optimizer&) = default;
};

/// Sample -> [1, C, H, W] network input; the mask is mapped from {0,1} to {-1,1}.
template <typename T>
Tensor<T> to_network_input(const ImageSample& s, bool with_mask) {
  s.validate();
  const std::size_t h = s.image.height, w = s.image.width;
  if (with_mask && !s.mask) throw std::invalid_argument(s.source_id + ": mask-conditioned model needs a mask");
  Tensor<T> t(Shape{1, with_mask ? 2u : 1u, h, w});
  for (std::size_t i = 0; i < h * w; ++i) {
    t[i] = static_cast<T>(s.image.pixels[i]);
    if (with_mask) t[h * w + i] = s.mask->pixels[i] >= 0.5f ? T{1} : T{-1};
  }
  return t;
}

/// Concatenates [1, C, H, W] tensors along the batch dimension.
template <typename T>
Tensor<T> stack(const std::vector<const Tensor<T>*>& items) {
  if (items.empty()) throw std::invalid_argument("stack: no tensors");
  Shape s = items[0]->shape();
  s[0] = items.size();
  std::vector<T> data;
  data.reserve(shape_numel(s));
  for (const auto* t : items) {
    if (t->shape() != items[0]->shape()) throw ShapeError("stack: mismatched shapes");
    data.insert(data.end(), t->data().begin(), t->data().end());
  }
  return Tensor<T>(s, std::move(data));
}

template <typename T>
class CycleGanModel {
 public:
  CycleGanModel() = default;

  CycleGanModel(CycleGanConfig config, std::uint64_t seed, AdamHyper hyper = {})
      : config_(std::move(config)), seed_(seed) {
    config_.validate();
    const Rng root(seed);
    g_y = Generator<T>(config_.generator, root.split("G_Y").next_u64());
    g_x = Generator<T>(config_.generator, root.split("G_X").next_u64());
    d_x = Discriminator<T>(config_.discriminator, root.split("D_X").next_u64());
    d_y = Discriminator<T>(config_.discriminator, root.split("D_Y").next_u64());
    reset_optimizers(hyper);
  }

  Generator<T> g_y;  // X -> Y (healthy -> cancerous)
  Generator<T> g_x;  // Y -> X
  Discriminator<T> d_x;
  Discriminator<T> d_y;
  Optimizer<T> opt_g_y, opt_g_x, opt_d_x, opt_d_y;
  std::uint64_t step = 0;

  const CycleGanConfig& config() const { return config_; }
  bool with_mask() const { return config_.with_mask; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t trained_steps() const { return step; }

  void reset_optimizers(AdamHyper hyper) {
    opt_g_y = Optimizer<T>(g_y.params(), hyper);
    opt_g_x = Optimizer<T>(g_x.params(), hyper);
    opt_d_x = Optimizer<T>(d_x.params(), hyper);
    opt_d_y = Optimizer<T>(d_y.params(), hyper);
  }

  /// Named view of every network, in checkpoint order.
  std::vector<std::pair<std::string, ParameterStore<T>*>> networks() {
    return {{"G_Y", &g_y.params()}, {"G_X", &g_x.params()}, {"D_X", &d_x.params()}, {"D_Y", &d_y.params()}};
  }
  std::vector<std::pair<std::string, Optimizer<T>*>> optimizers() {
    return {{"G_Y", &opt_g_y}, {"G_X", &opt_g_x}, {"D_X", &opt_d_x}, {"D_Y", &opt_d_y}};
  }

  /// Opposite-domain version of `s`. Images stay in [-1, 1]; the output mask
  /// (mask-conditioned models only) is the generated mask channel thresholded at 0.
  ImageSample translate(const ImageSample& s, Direction dir) const {
    if (config_.with_mask && !s.mask) {
      throw std::invalid_argument(s.source_id + ": mask-conditioned model requires a mask");
    }
    if (s.image.height != config_.height || s.image.width != config_.width) {
      throw ShapeError(s.source_id + ": image is " + std::to_string(s.image.height) + "x" +
                       std::to_string(s.image.width) + ", model expects " + std::to_string(config_.height) + "x" +
                       std::to_string(config_.width));
    }
    const Generator<T>& g = dir == Direction::kXtoY ? g_y : g_x;
    const Tensor<T> y = g(to_network_input<T>(s, config_.with_mask));
    ImageSample out;
    out.label = opposite(s.label);
    out.source_id = s.source_id + "-gan";
    out.provenance = Provenance::kGanGenerated;
    const std::size_t n = s.image.size();
    out.image = Image(s.image.height, s.image.width);
    for (std::size_t i = 0; i < n; ++i) out.image.pixels[i] = static_cast<float>(y[i]);
    if (config_.with_mask) {
      out.mask = Image(s.image.height, s.image.width);
      for (std::size_t i = 0; i < n; ++i) out.mask->pixels[i] = y[n + i] > T{0} ? 1.0f : 0.0f;
    }
    return out;
  }

  Checkpoint to_checkpoint(const TrainConfig& train) {
    Checkpoint c;
    c.kind = "cyclegan";
    c.step = step;
    KeyValues kv = config_.to_kv();
    kv.merge(train.to_kv());
    kv.set("model.seed", seed_);
    c.config = kv.to_text();
    c.rng = Rng(train.seed);
    for (auto [name, params] : networks()) {
      for (const auto& e : params->entries()) c.add(name + "/" + e.name, e.value);
    }
    auto nets = networks();
    auto opts = optimizers();
    for (std::size_t k = 0; k < nets.size(); ++k) {
      const auto& entries = nets[k].second->entries();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string base = "adam/" + nets[k].first + "/" + entries[i].name;
        const AdamState<T>& st = opts[k].second->states[i];
        c.add(base + "/m", st.first_moment);
        c.add(base + "/v", st.second_moment);
        c.counters[base + "/t"] = st.step_count;
      }
    }
    return c;
  }

  static CycleGanModel from_checkpoint(const Checkpoint& c) {
    if (c.kind != "cyclegan") throw CheckpointError("checkpoint kind is '" + c.kind + "', expected 'cyclegan'");
    const KeyValues kv = KeyValues::parse(c.config, "checkpoint config");
    const TrainConfig train = TrainConfig::from_kv(kv);
    CycleGanModel m(CycleGanConfig::from_kv(kv), kv.integer("model.seed"), train.adam);
    m.step = c.step;
    auto nets = m.networks();
    auto opts = m.optimizers();
    for (std::size_t k = 0; k < nets.size(); ++k) {
      auto& entries = nets[k].second->entries();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        c.restore(nets[k].first + "/" + entries[i].name, entries[i].value);
        const std::string base = "adam/" + nets[k].first + "/" + entries[i].name;
        AdamState<T>& st = opts[k].second->states[i];
        c.restore(base + "/m", st.first_moment);
        c.restore(base + "/v", st.second_moment);
        st.step_count = c.counter(base + "/t");
      }
    }
    return m;
  }

 private:
  CycleGanConfig config_;
  std::uint64_t seed_ = 0;
};

/// Training configuration stored in a cyclegan checkpoint.
inline TrainConfig train_config_of(const Checkpoint& c) {
  return TrainConfig::from_kv(KeyValues::parse(c.config, "checkpoint config"));
}

namespace detail {

template <typename F>
auto guarded(const char* stage, LossRecord& rec, F&& f) {
  try {
    return f();
  } catch (const TrainingDiverged&) {
    throw;
  } catch (const NumericError& e) {
    throw TrainingDiverged(stage, rec, e.what());
  }
}

inline void require_finite(const char* stage, const LossRecord& rec, double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingDiverged(stage, rec, std::string(what) + " is not finite");
}

}  // namespace detail

/// Discriminator update on LSGAN losses; generators are only evaluated.
template <typename T>
void discriminator_step(CycleGanModel<T>& m, const Tensor<T>& x, const Tensor<T>& y, const TrainConfig& cfg,
                        LossRecord& rec) {
  detail::guarded("discriminator", rec, [&] {
    const Tensor<T> fake_y = m.g_y(x);
    const Tensor<T> fake_x = m.g_x(y);
    Tape<T> tape;
    const Var<T> loss_y = lsgan_discriminator_loss(m.d_y.forward(tape, tape.constant(y)),
                                                   m.d_y.forward(tape, tape.constant(fake_y)), cfg.targets);
    const Var<T> loss_x = lsgan_discriminator_loss(m.d_x.forward(tape, tape.constant(x)),
                                                   m.d_x.forward(tape, tape.constant(fake_x)), cfg.targets);
    rec.loss_d_x = static_cast<double>(loss_x.value().item());
    rec.loss_d_y = static_cast<double>(loss_y.value().item());
    detail::require_finite("discriminator", rec, rec.loss_d_x + rec.loss_d_y, "discriminator loss");
    const Gradients<T> grads = tape.backward(ops::add(loss_x, loss_y));
    m.opt_d_x.step(m.d_x.params(), grads, cfg.lr_discriminator);
    m.opt_d_y.step(m.d_y.params(), grads, cfg.lr_discriminator);
    return 0;
  });
}

/// Generator update on adversarial + lambda * cycle loss; discriminators frozen.
template <typename T>
void generator_step(CycleGanModel<T>& m, const Tensor<T>& x, const Tensor<T>& y, const TrainConfig& cfg,
                    LossRecord& rec) {
  detail::guarded("generator", rec, [&] {
    Tape<T> tape;
    const Var<T> vx = tape.constant(x), vy = tape.constant(y);
    const Var<T> fake_y = m.g_y.forward(tape, vx);
    const Var<T> rec_x = m.g_x.forward(tape, fake_y);
    const Var<T> fake_x = m.g_x.forward(tape, vy);
    const Var<T> rec_y = m.g_y.forward(tape, fake_x);
    const Var<T> adv_y = lsgan_generator_loss(m.d_y.forward(tape, fake_y, false), cfg.targets.gen);
    const Var<T> adv_x = lsgan_generator_loss(m.d_x.forward(tape, fake_x, false), cfg.targets.gen);
    const Var<T> cyc = m.with_mask()
                           ? channelwise_loss<T>([](const std::vector<Var<T>>& a) { return cycle_loss(a[0], a[1], a[2], a[3]); },
                                                 {vx, rec_x, vy, rec_y})
                           : cycle_loss(vx, rec_x, vy, rec_y);
    const Var<T> total = total_loss(adv_x, adv_y, cyc, cfg.lambda_cyc);
    rec.loss_g_adv = static_cast<double>(adv_x.value().item()) + static_cast<double>(adv_y.value().item());
    rec.loss_cyc = static_cast<double>(cyc.value().item());
    rec.loss_total = static_cast<double>(total.value().item());
    detail::require_finite("generator", rec, rec.loss_total, "generator loss");
    const Gradients<T> grads = tape.backward(total);
    m.opt_g_y.step(m.g_y.params(), grads, cfg.lr_generator);
    m.opt_g_x.step(m.g_x.params(), grads, cfg.lr_generator);
    return 0;
  });
}

/// One alternating update: discriminators first, then generators.
template <typename T>
LossRecord train_step(CycleGanModel<T>& m, const Tensor<T>& x_batch, const Tensor<T>& y_batch, const TrainConfig& cfg) {
  LossRecord rec;
  rec.step = m.step;
  discriminator_step(m, x_batch, y_batch, cfg, rec);
  generator_step(m, x_batch, y_batch, cfg, rec);
  ++m.step;
  return rec;
}

struct TrainHooks {
  std::function<void(const LossRecord&)> on_step;
  std::function<void(std::uint64_t step)> on_checkpoint;  // after `step` updates
};

/// Runs steps model.step .. cfg.steps - 1. The batch for step s depends only
/// on (cfg.seed, s), so a resumed run draws the same batches.
template <typename T>
std::vector<LossRecord> train(CycleGanModel<T>& m, const std::vector<Tensor<T>>& xs, const std::vector<Tensor<T>>& ys,
                              const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (xs.empty()) throw std::invalid_argument("train: domain X is empty");
  if (ys.empty()) throw std::invalid_argument("train: domain Y is empty");
  const Rng batches = Rng(cfg.seed).split("batches");
  std::vector<LossRecord> log;
  while (m.step < cfg.steps) {
    Rng r = batches.split(m.step);
    std::vector<const Tensor<T>*> bx, by;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      bx.push_back(&xs[r.below(xs.size())]);
      by.push_back(&ys[r.below(ys.size())]);
    }
    const LossRecord rec = train_step(m, stack(bx), stack(by), cfg);
    log.push_back(rec);
    if (hooks.on_step) hooks.on_step(rec);
    if (hooks.on_checkpoint && cfg.checkpoint_every && m.step % cfg.checkpoint_every == 0) hooks.on_checkpoint(m.step);
  }
  return log;
}

/// Network inputs for both domains from labelled samples.
template <typename T>
std::pair<std::vector<Tensor<T>>, std::vector<Tensor<T>>> domain_tensors(const std::vector<ImageSample>& samples,
                                                                          bool with_mask) {
  std::pair<std::vector<Tensor<T>>, std::vector<Tensor<T>>> out;
  for (const auto& s : samples) {
    (s.label == Label::kHealthy ? out.first : out.second).push_back(to_network_input<T>(s, with_mask));
  }
  return out;
}

}  // namespace cycleaug
