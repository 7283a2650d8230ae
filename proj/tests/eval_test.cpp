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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cycleaug/experiment.hpp"
#include "oracles.hpp"

using namespace cycleaug;

namespace {

/// Scores an image by its mean brightness through a logistic.
struct BrightnessScorer {
  double bias = 0.0;
  double predict(const Image& img) const {
    double m = 0.0;
    for (float v : img.pixels) m += v;
    m /= static_cast<double>(img.size());
    return 1.0 / (1.0 + std::exp(-40.0 * (m - bias)));
  }
};

/// Returns the input unchanged apart from the bookkeeping fields.
struct IdentityGan {
  std::uint64_t trained_steps() const { return 1; }
  ImageSample translate(const ImageSample& s, Direction) const {
    ImageSample out = s;
    out.label = opposite(s.label);
    out.provenance = Provenance::kGanGenerated;
    out.source_id += "-gan";
    return out;
  }
};

/// Pushes every pixel to the target domain's brightness.
struct PerfectGan {
  std::uint64_t trained_steps() const { return 1; }
  ImageSample translate(const ImageSample& s, Direction dir) const {
    ImageSample out = IdentityGan{}.translate(s, dir);
    std::fill(out.image.pixels.begin(), out.image.pixels.end(), dir == Direction::kXtoY ? 0.9f : -0.9f);
    return out;
  }
};

ImageSample flat(Label label, float v, const std::string& id) {
  ImageSample s;
  s.image = Image(8, 8, v);
  s.mask = Image(8, 8);
  s.label = label;
  s.source_id = id;
  return s;
}

MetricsReport run(Variant v, std::uint64_t seed, double correct, std::optional<double> fooled, double auc, double f1) {
  MetricsReport m;
  m.variant = v;
  m.seed = seed;
  m.correctly_classified_pct = correct;
  m.fooled_pct = fooled;
  m.roc_auc_pct = auc;
  m.f1_pct = f1;
  return m;
}

}  // namespace

TEST(RocAuc, MatchesPairwiseOracle) {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = static_cast<double>(rng.below(i % 2 ? 5 : 1000)) / 7.0;  // odd instances have many ties
      labels[k] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    EXPECT_NEAR(roc_auc(scores, labels), oracle::auc_pairwise(scores, labels), 1e-12) << "instance " << i;
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
  Rng rng(43);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(30), t(30);
    std::vector<int> y(30);
    for (std::size_t k = 0; k < 30; ++k) {
      s[k] = rng.uniform(-2.0, 2.0);
      t[k] = std::exp(3.0 * s[k]) + 1.0;
      y[k] = k % 3 == 0;
    }
    EXPECT_EQ(roc_auc(s, y), roc_auc(t, y));
  }
}

TEST(RocAuc, KnownValuesAndErrors) {
  EXPECT_EQ(roc_auc({0.1, 0.9}, {0, 1}), 1.0);
  EXPECT_EQ(roc_auc({0.9, 0.1}, {0, 1}), 0.0);
  EXPECT_EQ(roc_auc({0.5, 0.5}, {0, 1}), 0.5);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(roc_auc({0.1}, {1, 0}), std::invalid_argument);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {1, 2}), std::invalid_argument);
}

TEST(F1, ThresholdAndEdgeCases) {
  const std::vector<double> s{0.1, 0.3, 0.2, 0.9};
  const std::vector<int> y{0, 1, 1, 0};
  // At 0.23: predicted positive {0.3, 0.9}; tp 1, fp 1, fn 1.
  EXPECT_DOUBLE_EQ(f1_score(s, y), 0.5);
  EXPECT_EQ(f1_score(s, y, 0.95), 0.0);
  EXPECT_EQ(f1_score({0.9, 0.1}, {1, 0}), 1.0);
  std::vector<std::size_t> order{3, 1, 0, 2};
  std::vector<double> ps;
  std::vector<int> py;
  for (auto k : order) {
    ps.push_back(s[k]);
    py.push_back(y[k]);
  }
  EXPECT_EQ(f1_score(ps, py), f1_score(s, y));
}

TEST(MeanStd, SampleStandardDeviation) {
  const MeanStd a = mean_std({2.0, 4.0, 6.0});
  EXPECT_DOUBLE_EQ(a.mean, 4.0);
  EXPECT_DOUBLE_EQ(a.std, 2.0);
  EXPECT_EQ(mean_std({7.0}).std, 0.0);
  EXPECT_THROW(mean_std({}), std::invalid_argument);
}

TEST(Fooling, IdentityGeneratorFoolsNobody) {
  std::vector<ImageSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(flat(i % 2 ? Label::kCancerous : Label::kHealthy, i % 2 ? 0.5f : -0.5f, "s" + std::to_string(i)));
  const auto r = fooled_rate(BrightnessScorer{}, IdentityGan{}, samples, 0.23);
  EXPECT_EQ(r.n_correct, 10u);
  ASSERT_TRUE(r.fooled_pct.has_value());
  EXPECT_EQ(*r.fooled_pct, 0.0);
}

TEST(Fooling, PerfectGeneratorFoolsEveryone) {
  std::vector<ImageSample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(flat(i % 2 ? Label::kCancerous : Label::kHealthy, i % 2 ? 0.5f : -0.5f, "s" + std::to_string(i)));
  const auto r = fooled_rate(BrightnessScorer{}, PerfectGan{}, samples, 0.23);
  EXPECT_EQ(*r.fooled_pct, 100.0);
}

TEST(Fooling, DenominatorIsTheCorrectSubset) {
  // 6 correct (3 per class), 4 misclassified; misclassified ones would flip too.
  std::vector<ImageSample> samples;
  for (int i = 0; i < 3; ++i) samples.push_back(flat(Label::kHealthy, -0.5f, "h" + std::to_string(i)));
  for (int i = 0; i < 3; ++i) samples.push_back(flat(Label::kCancerous, 0.5f, "c" + std::to_string(i)));
  for (int i = 0; i < 2; ++i) samples.push_back(flat(Label::kHealthy, 0.5f, "hx" + std::to_string(i)));
  for (int i = 0; i < 2; ++i) samples.push_back(flat(Label::kCancerous, -0.5f, "cx" + std::to_string(i)));
  const auto r = fooled_rate(BrightnessScorer{}, PerfectGan{}, samples, 0.23);
  EXPECT_EQ(r.n_samples, 10u);
  EXPECT_EQ(r.n_correct, 6u);
  EXPECT_EQ(r.n_fooled, 6u);
  EXPECT_DOUBLE_EQ(r.correctly_classified_pct, 60.0);
  EXPECT_DOUBLE_EQ(*r.fooled_pct, 100.0);
}

TEST(Fooling, NothingCorrectMeansAbsent) {
  std::vector<ImageSample> samples{flat(Label::kHealthy, 0.5f, "a"), flat(Label::kCancerous, -0.5f, "b")};
  const auto r = fooled_rate(BrightnessScorer{}, PerfectGan{}, samples, 0.23);
  EXPECT_EQ(r.correctly_classified_pct, 0.0);
  EXPECT_FALSE(r.fooled_pct.has_value());
  EXPECT_THROW(fooled_rate(BrightnessScorer{}, PerfectGan{}, {}, 0.23), std::invalid_argument);
}

TEST(Report, AggregatesAndWritesSchema) {
  const std::vector<Variant> variants{Variant::kOriginal, Variant::kClassicAugmented, Variant::kGanAugmented};
  std::vector<MetricsReport> runs;
  for (Variant v : variants)
    for (std::uint64_t s = 0; s < 3; ++s) runs.push_back(run(v, s, 90.0 + static_cast<double>(s), 30.0 + 2.0 * static_cast<double>(s), 95.0, 80.0));
  const RunStats st = aggregate(variants, runs);
  EXPECT_DOUBLE_EQ(st.cells.at(Variant::kOriginal).at("correctly_clf").value.mean, 91.0);
  EXPECT_DOUBLE_EQ(st.cells.at(Variant::kOriginal).at("fooled").value.std, 2.0);
  EXPECT_EQ(st.cells.at(Variant::kGanAugmented).at("roc_auc").n_runs, 3u);

  std::ostringstream long_form, wide;
  write_report_csv(long_form, st);
  write_table_csv(wide, st);
  std::istringstream lf(long_form.str());
  std::string line;
  std::getline(lf, line);
  EXPECT_EQ(line, "variant,metric,mean,std,n_runs");
  std::size_t rows = 0;
  while (std::getline(lf, line)) ++rows;
  EXPECT_EQ(rows, 12u);
  std::istringstream wf(wide.str());
  std::getline(wf, line);
  EXPECT_EQ(line, "variant,correctly_clf_mean,correctly_clf_std,fooled_mean,fooled_std,roc_auc_mean,roc_auc_std,f1_mean,f1_std");
  std::getline(wf, line);
  EXPECT_EQ(line, "original,91,1,32,2,95,0,80,0");
}

TEST(Report, SingleSeedHasZeroStd) {
  const RunStats st = aggregate({Variant::kOriginal}, {run(Variant::kOriginal, 0, 50.0, 10.0, 60.0, 70.0)});
  for (const auto& name : report_metrics()) {
    EXPECT_EQ(st.cells.at(Variant::kOriginal).at(name).value.std, 0.0);
    EXPECT_EQ(st.cells.at(Variant::kOriginal).at(name).n_runs, 1u);
  }
}

TEST(Report, AbsentFoolingLeavesEmptyCell) {
  const RunStats st = aggregate({Variant::kOriginal}, {run(Variant::kOriginal, 0, 0.0, std::nullopt, 50.0, 0.0)});
  std::ostringstream os;
  write_report_csv(os, st);
  EXPECT_NE(os.str().find("original,fooled,,,0\n"), std::string::npos);
}

TEST(Variants, ParseAndPrint) {
  for (Variant v : {Variant::kOriginal, Variant::kClassicAugmented, Variant::kGanAugmented})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("bogus"), std::invalid_argument);
}

class ExperimentTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthConfig c;
    c.n_healthy = 24;
    c.n_cancerous = 16;
    pool_ = new std::vector<ImageSample>(synth_generate(c));
    c.seed = 99;
    c.n_healthy = c.n_cancerous = 5;
    test_ = new std::vector<ImageSample>(synth_generate(c));
  }
  static void TearDownTestSuite() {
    delete pool_;
    delete test_;
  }
  static ExperimentConfig config() {
    ExperimentConfig cfg;
    cfg.classifier.steps = 10;
    cfg.classifier.eval_every = 5;
    cfg.train_frac = 0.75;
    return cfg;
  }
  static std::vector<ImageSample>* pool_;
  static std::vector<ImageSample>* test_;
};

std::vector<ImageSample>* ExperimentTest::pool_ = nullptr;
std::vector<ImageSample>* ExperimentTest::test_ = nullptr;

TEST_F(ExperimentTest, NineRunsInOrderAndIdentityNeverFools) {
  const IdentityGan gan;
  const auto runs = run_experiment(config(), *pool_, *test_, &gan);
  ASSERT_EQ(runs.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(runs[i].variant, config().variants[i / 3]);
    EXPECT_EQ(runs[i].seed, config().seeds[i % 3]);
    if (runs[i].fooled_pct) EXPECT_EQ(*runs[i].fooled_pct, 0.0);
  }
  const std::size_t n_train = runs[0].n_train;
  EXPECT_GT(runs[3].n_train, n_train);
  EXPECT_EQ(runs[3].n_train, runs[6].n_train);
}

TEST_F(ExperimentTest, ParallelMatchesSerialAndCacheIsReused) {
  const IdentityGan gan;
  ExperimentConfig cfg = config();
  cfg.variants = {Variant::kOriginal, Variant::kGanAugmented};
  cfg.seeds = {0, 1};
  const auto serial = run_experiment(cfg, *pool_, *test_, &gan);
  cfg.workers = 3;
  std::size_t completed = 0;
  ExperimentHooks hooks;
  hooks.completed = [&](const MetricsReport&) { ++completed; };
  const auto parallel = run_experiment(cfg, *pool_, *test_, &gan, hooks);
  EXPECT_EQ(completed, 4u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].correctly_classified_pct, parallel[i].correctly_classified_pct);
    EXPECT_EQ(serial[i].roc_auc_pct, parallel[i].roc_auc_pct);
    EXPECT_EQ(serial[i].best_step, parallel[i].best_step);
  }
  completed = 0;
  hooks.lookup = [&](Variant v, std::uint64_t s) -> std::optional<MetricsReport> {
    for (const auto& r : serial)
      if (r.variant == v && r.seed == s) return r;
    return std::nullopt;
  };
  const auto cached = run_experiment(cfg, *pool_, *test_, &gan, hooks);
  EXPECT_EQ(completed, 0u);
  EXPECT_EQ(cached.size(), 4u);
}

TEST_F(ExperimentTest, GanVariantNeedsAModel) {
  ExperimentConfig cfg = config();
  cfg.variants = {Variant::kGanAugmented};
  cfg.seeds = {0};
  EXPECT_THROW(run_experiment<IdentityGan>(cfg, *pool_, *test_, nullptr), std::invalid_argument);
  cfg.seeds.clear();
  const IdentityGan gan;
  EXPECT_THROW(run_experiment(cfg, *pool_, *test_, &gan), std::invalid_argument);
}

TEST(Config, ParseOverrideAndRoundTrip) {
  KeyValues kv = KeyValues::parse("# comment\n a = 1 \nb=hello # trailing\n\nlist = 0, 1,2\nflag = true\n");
  EXPECT_EQ(kv.integer("a"), 1u);
  EXPECT_EQ(kv.str("b"), "hello");
  EXPECT_EQ(kv.integers("list"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_TRUE(kv.boolean("flag"));
  KeyValues over;
  over.set("a", std::uint64_t{7});
  kv.merge(over);
  EXPECT_EQ(kv.integer("a"), 7u);
  EXPECT_EQ(KeyValues::parse(kv.to_text()).values(), kv.values());
}

TEST(Config, ErrorsNameKeyOrLine) {
  try {
    KeyValues::parse("ok = 1\nbroken line\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
  const KeyValues kv = KeyValues::parse("x = abc\nn = -3\n");
  EXPECT_THROW(kv.real("x"), ConfigError);
  EXPECT_THROW(kv.integer("n"), ConfigError);
  EXPECT_THROW(kv.str("missing"), ConfigError);
}

TEST(Config, DoublesRoundTripExactly) {
  for (double v : {0.1, 1e-4, 2e-4, 0.23, 1.0 / 3.0, 12345.678}) {
    KeyValues kv;
    kv.set("v", v);
    EXPECT_EQ(KeyValues::parse(kv.to_text()).real("v"), v);
  }
}

TEST(CheckpointFormat, RejectsCorruptBytes) {
  Checkpoint c;
  c.kind = "classifier";
  c.add("w", Tensor<float>(Shape{2, 2}, {1, 2, 3, 4}));
  auto bytes = c.serialize();
  EXPECT_EQ(Checkpoint::deserialize(bytes), c);
  bytes[0] = 'X';
  EXPECT_THROW(Checkpoint::deserialize(bytes), CheckpointError);
  bytes = c.serialize();
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(Checkpoint::deserialize(bytes), CheckpointError);
  EXPECT_THROW(c.add("w", Tensor<float>(Shape{1}, {0})), CheckpointError);
}
