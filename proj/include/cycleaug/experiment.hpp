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

// Fooling protocol and the seeded multi-variant experiment runner.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cycleaug/augment.hpp"
#include "cycleaug/classifier.hpp"
#include "cycleaug/config.hpp"
#include "cycleaug/metrics.hpp"

namespace cycleaug {

enum class Variant { kOriginal, kClassicAugmented, kGanAugmented };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kOriginal: return "original";
    case Variant::kClassicAugmented: return "classic_augmented";
    case Variant::kGanAugmented: return "gan_augmented";
  }
  return "original";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "original") return Variant::kOriginal;
  if (s == "classic_augmented" || s == "classic") return Variant::kClassicAugmented;
  if (s == "gan_augmented" || s == "gan") return Variant::kGanAugmented;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

/// Anything with an image-level malignancy score.
template <typename C>
concept ImageScorer = requires(const C& c, const Image& img) {
  { c.predict(img) } -> std::convertible_to<double>;
};

struct FoolingResult {
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;
  std::size_t n_fooled = 0;
  double correctly_classified_pct = 0.0;
  std::optional<double> fooled_pct;  // absent when nothing was classified correctly
};

/// Classify originals, keep the correct ones, translate each to the other
/// domain and count predictions that move to the target domain's label.
template <ImageScorer C, typename G>
FoolingResult fooled_rate(const C& classifier, const G& gan, const std::vector<ImageSample>& samples, double threshold) {
  if (samples.empty()) throw std::invalid_argument("fooled_rate: no samples");
  FoolingResult r;
  r.n_samples = samples.size();
  for (const auto& s : samples) {
    const Label pred = classifier.predict(s.image) > threshold ? Label::kCancerous : Label::kHealthy;
    if (pred != s.label) continue;
    ++r.n_correct;
    const Direction dir = s.label == Label::kHealthy ? Direction::kXtoY : Direction::kYtoX;
    const ImageSample t = gan.translate(s, dir);
    const Label after = classifier.predict(t.image) > threshold ? Label::kCancerous : Label::kHealthy;
    if (after == opposite(s.label)) ++r.n_fooled;
  }
  r.correctly_classified_pct = 100.0 * static_cast<double>(r.n_correct) / static_cast<double>(r.n_samples);
  if (r.n_correct > 0) r.fooled_pct = 100.0 * static_cast<double>(r.n_fooled) / static_cast<double>(r.n_correct);
  return r;
}

struct MetricsReport {
  Variant variant = Variant::kOriginal;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t n_train = 0;
  double correctly_classified_pct = 0.0;
  std::optional<double> fooled_pct;
  double roc_auc_pct = 0.0;
  double f1_pct = 0.0;
  std::size_t n_correct = 0;
  std::size_t n_fooled = 0;
  double best_eval_auc = 0.0;
  std::uint64_t best_step = 0;
};

/// Test-set metrics of one trained classifier.
template <ImageScorer C, typename G>
MetricsReport evaluate_classifier(const C& clf, const G* gan, const std::vector<ImageSample>& test, double threshold) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<double> scores;
  for (const auto& s : test) scores.push_back(clf.predict(s.image));
  const std::vector<int> labels = binary_labels(test);
  MetricsReport m;
  m.n_samples = test.size();
  const Confusion c = confusion(scores, labels, threshold);
  m.correctly_classified_pct = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(test.size());
  m.roc_auc_pct = 100.0 * roc_auc(scores, labels);
  m.f1_pct = 100.0 * f1_score(scores, labels, threshold);
  if (gan) {
    const FoolingResult f = fooled_rate(clf, *gan, test, threshold);
    m.fooled_pct = f.fooled_pct;
    m.n_correct = f.n_correct;
    m.n_fooled = f.n_fooled;
  }
  return m;
}

struct ExperimentConfig {
  std::vector<Variant> variants{Variant::kOriginal, Variant::kClassicAugmented, Variant::kGanAugmented};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double train_frac = 0.85;
  ClassifierConfig classifier;
  AugmentPolicy augment;
  std::size_t workers = 1;
};

struct MetricStats {
  MeanStd value;
  std::size_t n_runs = 0;
};

/// Per-variant aggregates in variant order; metric names as in the report.
struct RunStats {
  std::vector<Variant> variants;
  std::map<Variant, std::map<std::string, MetricStats>> cells;
};

inline const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> names{"correctly_clf", "fooled", "roc_auc", "f1"};
  return names;
}

inline RunStats aggregate(const std::vector<Variant>& variants, const std::vector<MetricsReport>& runs) {
  RunStats st;
  st.variants = variants;
  for (Variant v : variants) {
    std::map<std::string, std::vector<double>> vals;
    for (const auto& r : runs) {
      if (r.variant != v) continue;
      vals["correctly_clf"].push_back(r.correctly_classified_pct);
      if (r.fooled_pct) vals["fooled"].push_back(*r.fooled_pct);
      vals["roc_auc"].push_back(r.roc_auc_pct);
      vals["f1"].push_back(r.f1_pct);
    }
    for (const auto& name : report_metrics()) {
      MetricStats ms;
      auto it = vals.find(name);
      if (it != vals.end() && !it->second.empty()) {
        ms.value = mean_std(it->second);
        ms.n_runs = it->second.size();
      }
      st.cells[v][name] = ms;
    }
  }
  return st;
}

/// Long form: one row per (variant, metric).
inline void write_report_csv(std::ostream& os, const RunStats& st) {
  os << "variant,metric,mean,std,n_runs\n";
  for (Variant v : st.variants) {
    for (const auto& name : report_metrics()) {
      const MetricStats& m = st.cells.at(v).at(name);
      os << to_string(v) << ',' << name << ',';
      if (m.n_runs) {
        os << format_double(m.value.mean) << ',' << format_double(m.value.std);
      } else {
        os << ',';
      }
      os << ',' << m.n_runs << '\n';
    }
  }
}

/// Wide form: one row per variant, mean and std per metric.
inline void write_table_csv(std::ostream& os, const RunStats& st) {
  os << "variant";
  for (const auto& name : report_metrics()) os << ',' << name << "_mean," << name << "_std";
  os << '\n';
  for (Variant v : st.variants) {
    os << to_string(v);
    for (const auto& name : report_metrics()) {
      const MetricStats& m = st.cells.at(v).at(name);
      if (m.n_runs) {
        os << ',' << format_double(m.value.mean) << ',' << format_double(m.value.std);
      } else {
        os << ",,";
      }
    }
    os << '\n';
  }
}

struct ExperimentHooks {
  /// Returns a finished run to reuse instead of training.
  std::function<std::optional<MetricsReport>(Variant, std::uint64_t)> lookup;
  /// Called once per newly completed run, from the calling thread.
  std::function<void(const MetricsReport&)> completed;
};

/// Training set of one variant; the GAN is only needed for gan_augmented.
template <typename G>
std::vector<ImageSample> variant_training_set(Variant v, const std::vector<ImageSample>& train, const G* gan,
                                              std::uint64_t seed, const AugmentPolicy& policy) {
  switch (v) {
    case Variant::kOriginal: return train;
    case Variant::kClassicAugmented: return balance_with_classic(train, Rng(seed).split("classic"), policy);
    case Variant::kGanAugmented:
      if (!gan) throw std::invalid_argument("gan_augmented variant needs a trained GAN");
      return balance_with_gan(train, *gan);
  }
  return train;
}

/// One classifier per (variant, seed) on a seeded 85/15 split of `pool`,
/// evaluated on `test`. Runs execute on up to `workers` threads; results
/// come back in (variant, seed) order regardless.
template <typename G>
std::vector<MetricsReport> run_experiment(const ExperimentConfig& cfg, const std::vector<ImageSample>& pool,
                                          const std::vector<ImageSample>& test, const G* gan,
                                          const ExperimentHooks& hooks = {}) {
  if (cfg.variants.empty() || cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no variants or seeds");
  if (test.empty()) throw std::invalid_argument("run_experiment: empty test set");
  struct Job {
    Variant variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Variant v : cfg.variants)
    for (std::uint64_t s : cfg.seeds) jobs.push_back({v, s});

  const auto run_one = [&](const Job& j) {
    const DatasetSplit sp = split(pool, cfg.train_frac, j.seed);
    const auto train = variant_training_set(j.variant, sp.train, gan, j.seed, cfg.augment);
    ClassifierConfig cc = cfg.classifier;
    cc.seed = j.seed;
    const ClassifierTrainResult tr = train_classifier(train, sp.eval, cc);
    MetricsReport m = evaluate_classifier(tr.model, gan, test, cc.threshold);
    m.variant = j.variant;
    m.seed = j.seed;
    m.n_train = train.size();
    m.best_eval_auc = tr.best_auc;
    m.best_step = tr.best_step;
    return m;
  };

  std::vector<std::optional<MetricsReport>> results(jobs.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (hooks.lookup) results[i] = hooks.lookup(jobs[i].variant, jobs[i].seed);
    if (!results[i]) pending.push_back(i);
  }
  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
  for (std::size_t start = 0; start < pending.size(); start += workers) {
    std::vector<std::pair<std::size_t, std::future<MetricsReport>>> wave;
    for (std::size_t k = start; k < std::min(pending.size(), start + workers); ++k) {
      const std::size_t i = pending[k];
      if (workers == 1) {
        std::promise<MetricsReport> p;
        p.set_value(run_one(jobs[i]));
        wave.emplace_back(i, p.get_future());
      } else {
        wave.emplace_back(i, std::async(std::launch::async, run_one, jobs[i]));
      }
    }
    for (auto& [i, f] : wave) {
      results[i] = f.get();
      if (hooks.completed) hooks.completed(*results[i]);
    }
  }
  std::vector<MetricsReport> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace cycleaug
