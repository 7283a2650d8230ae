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
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cycleaug/augment.hpp"
#include "cycleaug/checkpoint.hpp"
#include "cycleaug/classifier.hpp"
#include "cycleaug/config.hpp"
#include "cycleaug/cyclegan.hpp"
#include "cycleaug/dataset.hpp"
#include "cycleaug/experiment.hpp"
#include "cycleaug/image.hpp"
#include "cycleaug/metrics.hpp"
#include "cycleaug/nn.hpp"

namespace cycleaug {

namespace fs = std::filesystem;

/// Flat run configuration: every key has a default and unknown keys are rejected.
class RunConfig {
 public:
  static const KeyValues& defaults() {
    static const KeyValues kv = [] {
      KeyValues d;
      d.set("seed", std::uint64_t{0});
      d.set("out", "runs");
      d.set("run_name", "");
      d.set("data.path", "data/synth");
      d.set("data.test_path", "");
      d.set("data.height", std::uint64_t{32});
      d.set("data.width", std::uint64_t{32});

      const SynthConfig s;
      d.set("synth.n_healthy", std::uint64_t{s.n_healthy});
      d.set("synth.n_cancerous", std::uint64_t{s.n_cancerous});
      d.set("synth.radius_min", s.radius_min);
      d.set("synth.radius_max", s.radius_max);
      d.set("synth.brightness_delta", s.brightness_delta);
      d.set("synth.texture_scale", s.texture_scale);
      d.set("synth.texture_contrast", s.texture_contrast);
      d.set("synth.base_level", s.base_level);

      const KeyValues model = CycleGanConfig::desk().to_kv();
      for (const auto& [k, v] : model.values()) {
        if (k != "model.height" && k != "model.width") d.set(k, v);
      }
      const KeyValues train = TrainConfig{}.to_kv();
      for (const auto& [k, v] : train.values()) {
        if (k != "train.seed") d.set(k, v);
      }
      d.set("gan.checkpoint", "");

      const KeyValues clf = ClassifierConfig{}.to_kv();
      for (const auto& [k, v] : clf.values()) {
        if (k != "clf.seed") d.set(k, v);
      }
      d.set("clf.variant", "original");

      const AugmentPolicy p;
      d.set("augment.translate_frac", p.translate_frac);
      d.set("augment.rotate_deg", p.rotate_deg);
      d.set("augment.flip_prob", p.flip_prob);

      d.set("eval.variants", "original,classic_augmented,gan_augmented");
      d.set("eval.seeds", "0,1,2");
      d.set("eval.train_frac", 0.85);
      d.set("eval.workers", std::uint64_t{1});
      d.set("eval.cache", true);

      d.set("translate.direction", "x2y");
      d.set("translate.limit", std::uint64_t{0});

      d.set("artifact.checkpoint_a", "");
      d.set("artifact.checkpoint_b", "");
      d.set("artifact.limit", std::uint64_t{20});
      return d;
    }();
    return kv;
  }

  RunConfig() : kv_(defaults()) {}

  /// Applies `overrides` on top of the defaults; unknown keys are an error.
  void apply(const KeyValues& overrides, const std::string& origin) {
    for (const auto& [k, v] : overrides.values()) {
      if (!defaults().has(k)) throw ConfigError(origin + ": unknown config key '" + k + "'");
      kv_.set(k, v);
    }
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().has(key)) throw ConfigError("unknown config key '" + key + "'");
    kv_.set(key, value);
  }

  const KeyValues& kv() const { return kv_; }
  std::uint64_t seed() const { return kv_.integer("seed"); }
  std::string str(const std::string& key) const { return kv_.str(key); }

  SynthConfig synth() const {
    SynthConfig s;
    s.n_healthy = kv_.integer("synth.n_healthy");
    s.n_cancerous = kv_.integer("synth.n_cancerous");
    s.height = kv_.integer("data.height");
    s.width = kv_.integer("data.width");
    s.radius_min = kv_.real("synth.radius_min");
    s.radius_max = kv_.real("synth.radius_max");
    s.brightness_delta = kv_.real("synth.brightness_delta");
    s.texture_scale = kv_.real("synth.texture_scale");
    s.texture_contrast = kv_.real("synth.texture_contrast");
    s.base_level = kv_.real("synth.base_level");
    s.seed = seed();
    return s;
  }

  CycleGanConfig gan_model() const {
    KeyValues m = kv_;
    m.set("model.height", kv_.str("data.height"));
    m.set("model.width", kv_.str("data.width"));
    CycleGanConfig c = CycleGanConfig::from_kv(m);
    c.validate();
    return c;
  }

  TrainConfig gan_train() const {
    KeyValues t = kv_;
    t.set("train.seed", seed());
    TrainConfig c = TrainConfig::from_kv(t);
    c.validate();
    return c;
  }

  ClassifierConfig classifier() const {
    KeyValues c = kv_;
    c.set("clf.seed", seed());
    ClassifierConfig cc = ClassifierConfig::from_kv(c);
    cc.validate();
    return cc;
  }

  AugmentPolicy augment() const {
    return {kv_.real("augment.translate_frac"), kv_.real("augment.rotate_deg"), kv_.real("augment.flip_prob")};
  }

  ExperimentConfig experiment() const {
    ExperimentConfig e;
    e.variants.clear();
    std::stringstream ss(kv_.str("eval.variants"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        e.variants.push_back(parse_variant(trim(item)));
      } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("eval.variants: ") + err.what());
      }
    }
    if (e.variants.empty()) throw ConfigError("eval.variants: empty list");
    e.seeds = kv_.integers("eval.seeds");
    e.train_frac = kv_.real("eval.train_frac");
    e.classifier = classifier();
    e.augment = augment();
    e.workers = std::max<std::uint64_t>(1, kv_.integer("eval.workers"));
    return e;
  }

  LoadOptions load_options() const { return {kv_.integer("data.height"), kv_.integer("data.width")}; }

 private:
  KeyValues kv_;
};

/// 64-bit FNV-1a; stable across platforms, used for cache keys.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string utc_stamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%S");
  return os.str();
}

/// `<out>/<run_name>` when a run name is set, else `<out>/<command>-<timestamp>`
/// with a numeric suffix on collision.
inline fs::path make_run_dir(const RunConfig& cfg, const std::string& command) {
  const fs::path out = cfg.str("out");
  fs::path dir;
  if (!cfg.str("run_name").empty()) {
    dir = out / cfg.str("run_name");
  } else {
    const std::string base = command + "-" + utc_stamp();
    dir = out / base;
    for (int k = 2; fs::exists(dir); ++k) dir = out / (base + "-" + std::to_string(k));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ImageIoError(dir.string() + ": cannot create output directory: " + ec.message());
  return dir;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageIoError(path.string() + ": cannot open for writing");
  f << text;
  if (!f) throw ImageIoError(path.string() + ": write failed");
}

inline void write_resolved(const RunConfig& cfg, const fs::path& dir) { write_text(dir / "config.resolved", cfg.kv().to_text()); }

/// Each sample must have a mask file next to its image.
inline void require_masks(const fs::path& root, const std::vector<ImageSample>& samples) {
  for (const auto& s : samples) {
    const fs::path base = root / std::string(to_string(s.label));
    if (!fs::exists(base / (s.source_id + "_mask.png")) && !fs::exists(base / (s.source_id + "_mask.pgm"))) {
      throw std::invalid_argument((base / s.source_id).string() + ": mask-conditioned model needs masks, none on disk");
    }
  }
}

inline CycleGanModel<float> load_gan(const fs::path& path) {
  if (path.empty()) throw ConfigError("gan.checkpoint is required for this command");
  return CycleGanModel<float>::from_checkpoint(Checkpoint::load(path));
}

inline std::vector<ImageSample> load_for_model(const fs::path& root, const CycleGanConfig& c) {
  return load_dataset(root, LoadOptions{c.height, c.width});
}

// ---------------------------------------------------------------------------
// Commands. Each writes into `dir` and returns nothing; failures throw.

inline void cmd_synth(const RunConfig& cfg, const fs::path& dir) {
  const SynthConfig s = cfg.synth();
  if (s.n_healthy == 0 && s.n_cancerous == 0) throw ConfigError("empty dataset requested");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  write_dataset(dir / "data", synth_generate(s));
}

inline void cmd_train_gan(const RunConfig& cfg, const fs::path& dir, std::ostream& log = std::clog) {
  const fs::path data = cfg.str("data.path");
  const TrainConfig tc = cfg.gan_train();
  std::optional<CycleGanModel<float>> model;
  if (!cfg.str("gan.checkpoint").empty()) {
    model.emplace(load_gan(cfg.str("gan.checkpoint")));
  } else {
    model.emplace(cfg.gan_model(), cfg.seed(), tc.adam);
  }
  auto& m = *model;
  const auto samples = load_for_model(data, m.config());
  if (m.with_mask()) require_masks(data, samples);
  const auto [xs, ys] = domain_tensors<float>(samples, m.with_mask());

  std::ofstream losses(dir / "losses.csv", std::ios::binary);
  if (!losses) throw ImageIoError((dir / "losses.csv").string() + ": cannot open for writing");
  losses << kLossCsvHeader << '\n';
  TrainHooks hooks;
  hooks.on_step = [&](const LossRecord& r) {
    losses << to_csv_row(r) << '\n';
    if (r.step % 100 == 0) log << "step " << r.step << " cyc " << r.loss_cyc << " total " << r.loss_total << '\n';
  };
  hooks.on_checkpoint = [&](std::uint64_t step) {
    m.to_checkpoint(tc).save(dir / ("gan-step" + std::to_string(step) + ".caug"));
  };
  if (m.step < tc.steps) {
    if (xs.empty()) throw std::invalid_argument(data.string() + ": no healthy images");
    if (ys.empty()) throw std::invalid_argument(data.string() + ": no cancerous images");
  }
  try {
    train(m, xs, ys, tc, hooks);
  } catch (const TrainingDiverged&) {
    losses.flush();
    throw;
  }
  m.to_checkpoint(tc).save(dir / "gan.caug");
}

/// Concatenates images left to right, all of the same height.
inline Gray8 hconcat(const std::vector<Gray8>& parts) {
  Gray8 out{parts.at(0).height, 0, {}};
  for (const auto& p : parts) out.width += p.width;
  out.pixels.resize(out.height * out.width);
  std::size_t x0 = 0;
  for (const auto& p : parts) {
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x) out.pixels[y * out.width + x0 + x] = p.pixels[y * p.width + x];
    x0 += p.width;
  }
  return out;
}

inline void cmd_translate(const RunConfig& cfg, const fs::path& dir) {
  const CycleGanModel<float> m = load_gan(cfg.str("gan.checkpoint"));
  const Direction d = parse_direction(cfg.str("translate.direction"));
  const fs::path data = cfg.str("data.path");
  auto samples = load_for_model(data, m.config());
  std::erase_if(samples, [&](const ImageSample& s) { return s.label != source_label(d); });
  const std::uint64_t limit = cfg.kv().integer("translate.limit");
  if (limit && samples.size() > limit) samples.resize(limit);
  if (samples.empty()) throw std::invalid_argument(data.string() + ": no " + std::string(to_string(source_label(d))) + " images");
  if (m.with_mask()) require_masks(data, samples);

  const fs::path tdir = dir / "translated", pdir = dir / "panels";
  fs::create_directories(tdir);
  fs::create_directories(pdir);
  for (const auto& s : samples) {
    const ImageSample t = m.translate(s, d);
    const Gray8 src = signed_to_gray8(s.image), dst = signed_to_gray8(t.image);
    write_png(tdir / (s.source_id + ".png"), dst);
    std::vector<Gray8> panel{src, dst};
    if (t.mask) {
      write_png(tdir / (s.source_id + "_mask.png"), mask_to_gray8(*t.mask));
      panel.push_back(mask_to_gray8(*s.mask));
      panel.push_back(mask_to_gray8(*t.mask));
    }
    write_png(pdir / (s.source_id + ".png"), hconcat(panel));
  }
}

inline std::vector<ImageSample> load_pool(const RunConfig& cfg) {
  return load_dataset(cfg.str("data.path"), cfg.load_options());
}

inline std::vector<ImageSample> load_test(const RunConfig& cfg) {
  if (cfg.str("data.test_path").empty()) throw ConfigError("data.test_path is required for this command");
  return load_dataset(cfg.str("data.test_path"), cfg.load_options());
}

/// GAN named by gan.checkpoint, if any, checked against the data dims.
inline std::optional<CycleGanModel<float>> optional_gan(const RunConfig& cfg) {
  if (cfg.str("gan.checkpoint").empty()) return std::nullopt;
  auto m = load_gan(cfg.str("gan.checkpoint"));
  const auto lo = cfg.load_options();
  if (m.config().height != lo.height || m.config().width != lo.width) {
    throw ConfigError("gan.checkpoint is " + std::to_string(m.config().height) + "x" + std::to_string(m.config().width) +
                      " but data is " + std::to_string(lo.height) + "x" + std::to_string(lo.width));
  }
  return m;
}

inline void cmd_train_clf(const RunConfig& cfg, const fs::path& dir) {
  const Variant v = [&] {
    try {
      return parse_variant(cfg.str("clf.variant"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("clf.variant: ") + e.what());
    }
  }();
  const ExperimentConfig e = cfg.experiment();
  const auto gan = optional_gan(cfg);
  if (v == Variant::kGanAugmented && !gan) throw ConfigError("clf.variant gan_augmented needs gan.checkpoint");
  const auto pool = load_pool(cfg);
  const DatasetSplit sp = split(pool, e.train_frac, cfg.seed());
  const auto train = variant_training_set(v, sp.train, gan ? &*gan : nullptr, cfg.seed(), e.augment);
  const ClassifierConfig cc = cfg.classifier();
  const ClassifierTrainResult r = train_classifier(train, sp.eval, cc);
  r.model.to_checkpoint(r.best_step, r.best_auc).save(dir / "clf.caug");

  std::ostringstream hist;
  hist << "step,eval_auc\n";
  for (const auto& [step, auc] : r.history) hist << step << ',' << format_double(auc) << '\n';
  write_text(dir / "history.csv", hist.str());

  if (!cfg.str("data.test_path").empty()) {
    const MetricsReport m = evaluate_classifier(r.model, gan ? &*gan : nullptr, load_test(cfg), cc.threshold);
    std::ostringstream os;
    os << "variant,n_train,n_samples,correctly_clf,fooled,roc_auc,f1\n";
    os << to_string(v) << ',' << train.size() << ',' << m.n_samples << ',' << format_double(m.correctly_classified_pct)
       << ',' << (m.fooled_pct ? format_double(*m.fooled_pct) : "") << ',' << format_double(m.roc_auc_pct) << ','
       << format_double(m.f1_pct) << '\n';
    write_text(dir / "metrics.csv", os.str());
  }
}

inline nlohmann::ordered_json to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(m.variant));
  j["seed"] = m.seed;
  j["n_samples"] = m.n_samples;
  j["n_train"] = m.n_train;
  j["correctly_clf"] = m.correctly_classified_pct;
  j["fooled"] = m.fooled_pct ? nlohmann::ordered_json(*m.fooled_pct) : nlohmann::ordered_json(nullptr);
  j["roc_auc"] = m.roc_auc_pct;
  j["f1"] = m.f1_pct;
  j["n_correct"] = m.n_correct;
  j["n_fooled"] = m.n_fooled;
  j["best_eval_auc"] = m.best_eval_auc;
  j["best_step"] = m.best_step;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::ordered_json& j) {
  MetricsReport m;
  m.variant = parse_variant(j.at("variant").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_samples = j.at("n_samples").get<std::size_t>();
  m.n_train = j.at("n_train").get<std::size_t>();
  m.correctly_classified_pct = j.at("correctly_clf").get<double>();
  if (!j.at("fooled").is_null()) m.fooled_pct = j.at("fooled").get<double>();
  m.roc_auc_pct = j.at("roc_auc").get<double>();
  m.f1_pct = j.at("f1").get<double>();
  m.n_correct = j.at("n_correct").get<std::size_t>();
  m.n_fooled = j.at("n_fooled").get<std::size_t>();
  m.best_eval_auc = j.at("best_eval_auc").get<double>();
  m.best_step = j.at("best_step").get<std::uint64_t>();
  return m;
}

/// Everything that determines a run's result, minus the per-run seed.
inline std::string eval_cache_key(const RunConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.kv().values()) {
    if (k == "out" || k == "run_name" || k == "eval.workers" || k == "eval.cache" || k == "eval.seeds" ||
        k == "eval.variants" || k == "seed" || k.starts_with("translate.") || k.starts_with("artifact.")) {
      continue;
    }
    text += k + "=" + v + "\n";
  }
  for (const char* key : {"data.path", "data.test_path", "gan.checkpoint"}) {
    const fs::path p = cfg.str(key);
    if (p.empty() || !fs::exists(p)) continue;
    if (fs::is_regular_file(p)) {
      const auto bytes = read_file_bytes(p);
      text += std::string(key) + "#" + std::to_string(fnv1a({reinterpret_cast<const char*>(bytes.data()), bytes.size()}));
    } else {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (!e.is_regular_file()) continue;
        const auto bytes = read_file_bytes(e.path());
        text += fs::relative(e.path(), p).generic_string() + "#" +
                std::to_string(fnv1a({reinterpret_cast<const char*>(bytes.data()), bytes.size()})) + "\n";
      }
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
  return os.str();
}

/// Appends one line per finished run to `<out>/eval-cache.jsonl`; a rerun with the
/// same key reuses those runs instead of retraining.
class RunCache {
 public:
  RunCache(fs::path path, std::string key) : path_(std::move(path)), key_(std::move(key)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::ordered_json::parse(line);
        if (j.at("key").get<std::string>() != key_) continue;
        const MetricsReport m = metrics_from_json(j.at("run"));
        runs_[{m.variant, m.seed}] = m;
      } catch (const std::exception&) {
        // a torn line from an interrupted run; ignored
      }
    }
  }

  std::optional<MetricsReport> lookup(Variant v, std::uint64_t seed) const {
    auto it = runs_.find({v, seed});
    if (it == runs_.end()) return std::nullopt;
    return it->second;
  }

  void add(const MetricsReport& m) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    nlohmann::ordered_json j;
    j["key"] = key_;
    j["run"] = to_json(m);
    out << j.dump() << '\n';
    runs_[{m.variant, m.seed}] = m;
  }

 private:
  fs::path path_;
  std::string key_;
  std::map<std::pair<Variant, std::uint64_t>, MetricsReport> runs_;
};

inline void cmd_eval(const RunConfig& cfg, const fs::path& dir, std::ostream& log = std::clog) {
  const ExperimentConfig e = cfg.experiment();
  const auto gan = optional_gan(cfg);
  for (Variant v : e.variants) {
    if (v == Variant::kGanAugmented && !gan) throw ConfigError("eval.variants includes gan_augmented; set gan.checkpoint");
  }
  const auto pool = load_pool(cfg);
  const auto test = load_test(cfg);

  std::optional<RunCache> cache;
  if (cfg.kv().boolean("eval.cache")) cache.emplace(fs::path(cfg.str("out")) / "eval-cache.jsonl", eval_cache_key(cfg));
  ExperimentHooks hooks;
  if (cache) {
    hooks.lookup = [&](Variant v, std::uint64_t s) { return cache->lookup(v, s); };
    hooks.completed = [&](const MetricsReport& m) {
      cache->add(m);
      log << "run " << to_string(m.variant) << " seed " << m.seed << " done\n";
    };
  }
  const auto runs = run_experiment(e, pool, test, gan ? &*gan : nullptr, hooks);

  std::ostringstream jl;
  for (const auto& r : runs) jl << to_json(r).dump() << '\n';
  write_text(dir / "runs.jsonl", jl.str());
  const RunStats st = aggregate(e.variants, runs);
  std::ostringstream rep, tab;
  write_report_csv(rep, st);
  write_table_csv(tab, st);
  write_text(dir / "report.csv", rep.str());
  write_text(dir / "table.csv", tab.str());
}

/// |DFT|^2 of a real image, computed separably.
inline std::vector<double> power_spectrum(const Image& img) {
  const std::size_t h = img.height, w = img.width;
  std::vector<std::complex<double>> rows(h * w);
  const auto tw = [](std::size_t k, std::size_t i, std::size_t n) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>((k * i) % n) / static_cast<double>(n);
    return std::complex<double>(std::cos(a), std::sin(a));
  };
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t kx = 0; kx < w; ++kx) {
      std::complex<double> acc = 0.0;
      for (std::size_t x = 0; x < w; ++x) acc += static_cast<double>(img.at(y, x)) * tw(kx, x, w);
      rows[y * w + kx] = acc;
    }
  std::vector<double> p(h * w);
  for (std::size_t kx = 0; kx < w; ++kx)
    for (std::size_t ky = 0; ky < h; ++ky) {
      std::complex<double> acc = 0.0;
      for (std::size_t y = 0; y < h; ++y) acc += rows[y * w + kx] * tw(ky, y, h);
      p[ky * w + kx] = std::norm(acc);
    }
  return p;
}

/// Centred log-power image of the mean spectrum, scaled to the full 8-bit range.
inline Gray8 spectrum_image(const std::vector<double>& mean_power, std::size_t h, std::size_t w) {
  std::vector<double> lg(h * w);
  for (std::size_t i = 0; i < lg.size(); ++i) lg[i] = std::log10(1e-12 + mean_power[i]);
  const auto [lo, hi] = std::minmax_element(lg.begin(), lg.end());
  const double span = *hi - *lo > 0 ? *hi - *lo : 1.0;
  Gray8 g{h, w, std::vector<std::uint8_t>(h * w)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sy = (y + h / 2) % h, sx = (x + w / 2) % w;
      g.pixels[y * w + x] = static_cast<std::uint8_t>(std::lround(255.0 * (lg[sy * w + sx] - *lo) / span));
    }
  return g;
}

inline void cmd_artifact_report(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.str("artifact.checkpoint_a").empty() || cfg.str("artifact.checkpoint_b").empty()) {
    throw ConfigError("artifact.checkpoint_a and artifact.checkpoint_b are required");
  }
  const CycleGanModel<float> a = load_gan(cfg.str("artifact.checkpoint_a"));
  const CycleGanModel<float> b = load_gan(cfg.str("artifact.checkpoint_b"));
  if (a.config().height != b.config().height || a.config().width != b.config().width) {
    throw ConfigError("artifact-report: checkpoints have different image sizes");
  }
  const fs::path data = cfg.str("data.path");
  auto probes = load_for_model(data, a.config());
  std::erase_if(probes, [](const ImageSample& s) { return s.label != Label::kHealthy; });
  const std::uint64_t limit = cfg.kv().integer("artifact.limit");
  if (limit && probes.size() > limit) probes.resize(limit);
  if (probes.empty()) throw std::invalid_argument(data.string() + ": empty probe set");
  if (a.with_mask() || b.with_mask()) require_masks(data, probes);

  const std::size_t h = a.config().height, w = a.config().width;
  std::vector<double> pa(h * w, 0.0), pb(h * w, 0.0);
  std::vector<double> ea, eb;
  std::ostringstream os;
  os << "image,backend_a,backend_b,energy_a,energy_b\n";
  const std::string ba(to_string(a.config().generator.upsample_backend)), bb(to_string(b.config().generator.upsample_backend));
  for (const auto& s : probes) {
    const Image ya = a.translate(s, Direction::kXtoY).image, yb = b.translate(s, Direction::kXtoY).image;
    ea.push_back(checkerboard_energy<float>(ya.pixels, h, w));
    eb.push_back(checkerboard_energy<float>(yb.pixels, h, w));
    const auto sa = power_spectrum(ya), sb = power_spectrum(yb);
    for (std::size_t i = 0; i < h * w; ++i) {
      pa[i] += sa[i] / static_cast<double>(probes.size());
      pb[i] += sb[i] / static_cast<double>(probes.size());
    }
    os << s.source_id << ',' << ba << ',' << bb << ',' << format_double(ea.back()) << ',' << format_double(eb.back()) << '\n';
  }
  write_text(dir / "artifacts.csv", os.str());
  std::ostringstream sum;
  sum << "model,backend,icnr,mean_energy,n_images\n";
  sum << "a," << ba << ',' << (a.config().generator.icnr ? "true" : "false") << ',' << format_double(mean_std(ea).mean)
      << ',' << ea.size() << '\n';
  sum << "b," << bb << ',' << (b.config().generator.icnr ? "true" : "false") << ',' << format_double(mean_std(eb).mean)
      << ',' << eb.size() << '\n';
  write_text(dir / "summary.csv", sum.str());
  write_png(dir / "spectrum_a.png", spectrum_image(pa, h, w));
  write_png(dir / "spectrum_b.png", spectrum_image(pb, h, w));
}

/// Names of the commands in dispatch order.
inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth", "train-gan", "translate", "train-clf", "eval", "artifact-report"};
  return names;
}

/// Creates the run directory, echoes the config and runs `command`.
inline fs::path run_command(const std::string& command, const RunConfig& cfg, std::ostream& log = std::clog) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
    throw ConfigError("unknown command '" + command + "'");
  }
  const fs::path dir = make_run_dir(cfg, command);
  write_resolved(cfg, dir);
  if (command == "synth") cmd_synth(cfg, dir);
  else if (command == "train-gan") cmd_train_gan(cfg, dir, log);
  else if (command == "translate") cmd_translate(cfg, dir);
  else if (command == "train-clf") cmd_train_clf(cfg, dir);
  else if (command == "eval") cmd_eval(cfg, dir, log);
  else cmd_artifact_report(cfg, dir);
  return dir;
}

}  // namespace cycleaug
