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

#include <filesystem>
#include <limits>

#include "cycleaug/cyclegan.hpp"
#include "cycleaug/dataset.hpp"
#include "cycleaug/losses.hpp"

using namespace cycleaug;

namespace {

using Vars = std::vector<Var<double>>;

Tensor<double> filled(const Shape& s, double v) { return Tensor<double>(s, std::vector<double>(shape_numel(s), v)); }

double value(Var<double> v) { return v.value().item(); }

/// Small generator and discriminator at 32x32 so a step takes milliseconds.
CycleGanConfig small_config(bool with_mask = false) {
  CycleGanConfig c = CycleGanConfig::desk(with_mask);
  c.generator.width = 0.0625;
  c.generator.res_blocks = 1;
  c.discriminator.width = 0.0625;
  return c;
}

TrainConfig small_train(std::uint64_t steps) {
  TrainConfig t;
  t.steps = steps;
  t.seed = 5;
  return t;
}

std::pair<std::vector<Tensor<float>>, std::vector<Tensor<float>>> small_domains(bool with_mask = false) {
  SynthConfig s;
  s.n_healthy = s.n_cancerous = 6;
  return domain_tensors<float>(synth_generate(s), with_mask);
}

std::vector<std::uint8_t> bytes_of(CycleGanModel<float>& m, const TrainConfig& t) { return m.to_checkpoint(t).serialize(); }

}  // namespace

TEST(LsganLoss, WorkedValues) {
  Tape<double> t;
  const Shape s{2, 1, 3, 3};
  const auto d = [&](double v) { return t.constant(filled(s, v)); };
  EXPECT_EQ(value(lsgan_discriminator_loss(d(1.0), d(0.0))), 0.0);
  EXPECT_EQ(value(lsgan_discriminator_loss(d(0.0), d(1.0))), 1.0);
  EXPECT_EQ(value(lsgan_discriminator_loss(d(0.5), d(0.5))), 0.25);
  EXPECT_EQ(value(lsgan_generator_loss(d(1.0))), 0.0);
  EXPECT_EQ(value(lsgan_generator_loss(d(0.0))), 0.5);
  EXPECT_THROW(lsgan_discriminator_loss(d(0.0), t.constant(filled({1, 1, 3, 3}, 0.0))), ShapeError);
}

TEST(LsganLoss, ConfigurableTargets) {
  Tape<double> t;
  const Shape s{1, 1, 2, 2};
  const LsganTargets stated{-1.0, 0.0, 0.0};
  EXPECT_EQ(value(lsgan_discriminator_loss(t.constant(filled(s, -1.0)), t.constant(filled(s, 0.0)), stated)), 0.0);
  EXPECT_EQ(value(lsgan_generator_loss(t.constant(filled(s, 0.0)), stated.gen)), 0.0);
}

TEST(LsganLoss, GeneratorGradientPointsAwayFromTarget) {
  for (double v : {-0.7, 0.2, 1.6}) {
    Tape<double> t;
    const Tensor<double> p = filled({1, 1, 2, 2}, v);
    const auto g = t.backward(lsgan_generator_loss(t.parameter(p)));
    const Tensor<double> grad = g.of(p);
    for (double x : grad.data()) EXPECT_EQ(x > 0.0, v > 1.0) << v;
  }
}

TEST(CycleLoss, WorkedValues) {
  Tape<double> t;
  const Shape s{1, 1, 1, 2};
  const auto c = [&](double v) { return t.constant(filled(s, v)); };
  EXPECT_EQ(value(cycle_loss(c(0.3), c(0.3), c(-0.2), c(-0.2))), 0.0);
  EXPECT_EQ(value(cycle_loss(c(0.0), c(1.0), c(0.5), c(0.5))), 1.0);
  EXPECT_EQ(value(cycle_loss(c(0.5), c(0.5), c(0.0), c(1.0))), 1.0);
  EXPECT_THROW(cycle_loss(c(0.0), t.constant(filled({1, 1, 2, 1}, 0.0)), c(0.0), c(0.0)), ShapeError);
}

TEST(CycleLoss, SymmetricUnderSwap) {
  Rng rng(4);
  Tape<double> t;
  std::vector<Var<double>> v;
  for (int i = 0; i < 4; ++i) {
    Tensor<double> x({2, 1, 3, 3});
    for (double& e : x.data()) e = rng.uniform(-1.0, 1.0);
    v.push_back(t.constant(x));
  }
  EXPECT_EQ(value(cycle_loss(v[0], v[1], v[2], v[3])), value(cycle_loss(v[2], v[3], v[0], v[1])));
}

TEST(TotalLoss, WorkedValuesAndLinearity) {
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 10.0), 33.0);
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 0.0), 3.0);
  EXPECT_EQ(total_loss(0.0, 0.0, 0.0, 10.0), 0.0);
  EXPECT_THROW(total_loss(1.0, 2.0, 3.0, -1.0), std::invalid_argument);
  Tape<double> t;
  const Shape s{1};
  const auto v = [&](double x) { return t.constant(filled(s, x)); };
  EXPECT_EQ(value(total_loss(v(1.0), v(2.0), v(3.0), 10.0)), 33.0);
  const double l0 = total_loss(0.4, 0.7, 1.3, 0.0), l1 = total_loss(0.4, 0.7, 1.3, 1.0), l2 = total_loss(0.4, 0.7, 1.3, 2.0);
  EXPECT_DOUBLE_EQ(l1 - l0, 1.3);
  EXPECT_DOUBLE_EQ(l2 - l1, 1.3);
}

TEST(ChannelwiseLoss, SumsImageAndMaskTerms) {
  Tape<double> t;
  const Shape s{1, 2, 1, 2};
  // image channel differs by 0.5, mask channel by 0.25
  const auto a = t.constant(Tensor<double>(s, {0.0, 0.0, 0.0, 0.0}));
  const auto b = t.constant(Tensor<double>(s, {0.5, 0.5, 0.25, 0.25}));
  const auto l1 = [](const Vars& v) { return l1_loss(v[0], v[1]); };
  EXPECT_EQ(value(channelwise_loss<double>(l1, {a, b})), 0.75);
  EXPECT_EQ(value(channelwise_loss<double>(l1, {a, a})), 0.0);
  EXPECT_THROW(channelwise_loss<double>(l1, {t.constant(filled({1, 1, 1, 2}, 0.0)), t.constant(filled({1, 1, 1, 2}, 0.0))}),
               ShapeError);
}

TEST(ChannelwiseLoss, DecomposesIntoImageAndMaskTerms) {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    Tape<double> t;
    std::vector<Tensor<double>> xs;
    for (int k = 0; k < 4; ++k) {
      Tensor<double> x({1, 2, 8, 8});
      for (double& e : x.data()) e = rng.uniform(-1.0, 1.0);
      xs.push_back(x);
    }
    Vars v, img, msk;
    for (const auto& x : xs) {
      v.push_back(t.constant(x));
      img.push_back(ops::slice_channels(v.back(), 0, 1));
      msk.push_back(ops::slice_channels(v.back(), 1, 1));
    }
    const auto cyc = [](const Vars& a) { return cycle_loss(a[0], a[1], a[2], a[3]); };
    const double joint = value(channelwise_loss<double>(cyc, v));
    const double image_term = value(cyc(img)), mask_term = value(cyc(msk));
    EXPECT_NEAR(joint, image_term + mask_term, 1e-6);
    // With an identical mask channel the joint loss equals the image-only loss.
    Vars same;
    for (std::size_t k = 0; k < 4; ++k) {
      Tensor<double> x = xs[k];
      for (std::size_t p = 64; p < 128; ++p) x[p] = xs[0][p];
      same.push_back(t.constant(x));
    }
    Vars same_img;
    for (const auto& s : same) same_img.push_back(ops::slice_channels(s, 0, 1));
    EXPECT_EQ(value(channelwise_loss<double>(cyc, same)), value(cyc(same_img)));
  }
}

TEST(LossesArePure, SameInputsSameBits) {
  Tape<double> t;
  const auto a = t.constant(filled({1, 1, 4, 4}, 0.3)), b = t.constant(filled({1, 1, 4, 4}, -0.1));
  EXPECT_EQ(value(lsgan_discriminator_loss(a, b)), value(lsgan_discriminator_loss(a, b)));
  EXPECT_EQ(value(cycle_loss(a, b, b, a)), value(cycle_loss(a, b, b, a)));
}

TEST(CycleGan, ConfigRoundTripsThroughKeyValues) {
  CycleGanConfig c = small_config(true);
  c.generator.upsample_backend = UpsampleBackend::kDeconv;
  const CycleGanConfig back = CycleGanConfig::from_kv(KeyValues::parse(c.to_kv().to_text()));
  EXPECT_EQ(back.to_kv().to_text(), c.to_kv().to_text());
  TrainConfig t = small_train(7);
  t.targets = {-1.0, 0.0, 0.0};
  EXPECT_EQ(TrainConfig::from_kv(KeyValues::parse(t.to_kv().to_text())).to_kv().to_text(), t.to_kv().to_text());
}

TEST(CycleGan, RejectsBadConfig) {
  CycleGanConfig c = small_config();
  c.height = 30;
  EXPECT_THROW(CycleGanModel<float>(c, 0), std::invalid_argument);
  TrainConfig t;
  t.lr_generator = 0.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(CycleGan, SameSeedIsBitIdenticalAfterTenSteps) {
  const auto [xs, ys] = small_domains();
  const TrainConfig t = small_train(10);
  CycleGanModel<float> a(small_config(), 3), b(small_config(), 3);
  const auto la = train(a, xs, ys, t), lb = train(b, xs, ys, t);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(bytes_of(a, t), bytes_of(b, t));
  CycleGanModel<float> c(small_config(), 4);
  train(c, xs, ys, t);
  EXPECT_NE(bytes_of(a, t), bytes_of(c, t));
}

TEST(CycleGan, DiscriminatorStepFreezesGenerators) {
  const auto [xs, ys] = small_domains();
  CycleGanModel<float> m(small_config(), 1);
  const auto g_y = m.g_y.params(), g_x = m.g_x.params(), d_x = m.d_x.params(), d_y = m.d_y.params();
  LossRecord rec;
  discriminator_step(m, xs[0], ys[0], small_train(1), rec);
  EXPECT_EQ(m.g_y.params(), g_y);
  EXPECT_EQ(m.g_x.params(), g_x);
  EXPECT_NE(m.d_x.params(), d_x);
  EXPECT_NE(m.d_y.params(), d_y);
}

TEST(CycleGan, GeneratorStepFreezesDiscriminators) {
  const auto [xs, ys] = small_domains();
  CycleGanModel<float> m(small_config(), 1);
  const auto g_y = m.g_y.params(), g_x = m.g_x.params(), d_x = m.d_x.params(), d_y = m.d_y.params();
  LossRecord rec;
  generator_step(m, xs[0], ys[0], small_train(1), rec);
  EXPECT_EQ(m.d_x.params(), d_x);
  EXPECT_EQ(m.d_y.params(), d_y);
  EXPECT_NE(m.g_y.params(), g_y);
  EXPECT_NE(m.g_x.params(), g_x);
  EXPECT_NEAR(rec.loss_total, total_loss(0.0, rec.loss_g_adv, rec.loss_cyc, 10.0), 1e-4 * rec.loss_total);
}

TEST(CycleGan, ZeroStepsLeavesInitialization) {
  const auto [xs, ys] = small_domains();
  const TrainConfig t = small_train(0);
  CycleGanModel<float> m(small_config(), 9), init(small_config(), 9);
  EXPECT_TRUE(train(m, xs, ys, t).empty());
  EXPECT_EQ(bytes_of(m, t), bytes_of(init, t));
}

TEST(CycleGan, ResumeMatchesUninterruptedRun) {
  const auto [xs, ys] = small_domains();
  TrainConfig full = small_train(8);
  CycleGanModel<float> straight(small_config(), 2);
  const auto log_straight = train(straight, xs, ys, full);

  TrainConfig half = full;
  half.steps = 3;
  CycleGanModel<float> first(small_config(), 2);
  const auto log_first = train(first, xs, ys, half);
  const Checkpoint c = Checkpoint::deserialize(first.to_checkpoint(half).serialize());
  CycleGanModel<float> resumed = CycleGanModel<float>::from_checkpoint(c);
  EXPECT_EQ(resumed.step, 3u);
  const auto log_second = train(resumed, xs, ys, full);
  ASSERT_EQ(log_first.size() + log_second.size(), log_straight.size());
  for (std::size_t i = 0; i < log_first.size(); ++i) EXPECT_EQ(log_first[i], log_straight[i]);
  for (std::size_t i = 0; i < log_second.size(); ++i) EXPECT_EQ(log_second[i], log_straight[3 + i]);
  EXPECT_EQ(bytes_of(resumed, full), bytes_of(straight, full));
}

TEST(CycleGan, CheckpointFileRoundTrip) {
  const auto [xs, ys] = small_domains(true);
  const TrainConfig t = small_train(2);
  CycleGanModel<float> m(small_config(true), 6);
  train(m, xs, ys, t);
  const auto path = std::filesystem::temp_directory_path() / "cycleaug_gan_roundtrip.caug";
  m.to_checkpoint(t).save(path);
  const Checkpoint c = Checkpoint::load(path);
  EXPECT_EQ(c, m.to_checkpoint(t));
  CycleGanModel<float> back = CycleGanModel<float>::from_checkpoint(c);
  EXPECT_TRUE(back.with_mask());
  EXPECT_EQ(bytes_of(back, train_config_of(c)), bytes_of(m, t));
  std::filesystem::remove(path);
  EXPECT_THROW(Checkpoint::load(path), CheckpointError);
}

TEST(CycleGan, HugeCycleWeightShrinksReconstructionError) {
  const auto [xs, ys] = small_domains();
  TrainConfig t = small_train(200);
  t.lambda_cyc = 1e6;
  CycleGanModel<float> m(small_config(), 11);
  const auto log = train(m, xs, ys, t);
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    early += log[i].loss_cyc;
    late += log[log.size() - 20 + i].loss_cyc;
  }
  EXPECT_LT(late, early);
}

TEST(CycleGan, NonFiniteInputAbortsWithRecord) {
  const auto [xs, ys] = small_domains();
  CycleGanModel<float> m(small_config(), 1);
  Tensor<float> bad = xs[0];
  bad[5] = std::numeric_limits<float>::quiet_NaN();
  try {
    train_step(m, bad, ys[0], small_train(1));
    FAIL();
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.record().step, 0u);
    EXPECT_FALSE(e.stage().empty());
  }
}

TEST(CycleGan, EmptyDomainIsRejected) {
  const auto [xs, ys] = small_domains();
  CycleGanModel<float> m(small_config(), 1);
  EXPECT_THROW(train(m, {}, ys, small_train(1)), std::invalid_argument);
  EXPECT_THROW(train(m, xs, {}, small_train(1)), std::invalid_argument);
}

TEST(CycleGan, TranslateFlipsLabelAndStaysInRange) {
  SynthConfig s;
  s.n_healthy = s.n_cancerous = 2;
  const auto samples = synth_generate(s);
  CycleGanModel<float> m(small_config(), 1);
  for (const auto& x : samples) {
    const ImageSample before = x;
    const ImageSample out = m.translate(x, x.label == Label::kHealthy ? Direction::kXtoY : Direction::kYtoX);
    EXPECT_EQ(x, before);
    EXPECT_NE(out.label, x.label);
    EXPECT_EQ(out.provenance, Provenance::kGanGenerated);
    EXPECT_FALSE(out.mask.has_value());
    for (float v : out.image.pixels) {
      EXPECT_GE(v, -1.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(CycleGan, TranslateEnforcesModeAndSize) {
  SynthConfig s;
  s.n_healthy = 1;
  s.n_cancerous = 0;
  ImageSample x = synth_generate(s).front();
  CycleGanModel<float> conditioned(small_config(true), 1);
  const ImageSample with_mask = conditioned.translate(x, Direction::kXtoY);
  ASSERT_TRUE(with_mask.mask.has_value());
  for (float v : with_mask.mask->pixels) EXPECT_TRUE(v == 0.0f || v == 1.0f);
  x.mask.reset();
  EXPECT_THROW(conditioned.translate(x, Direction::kXtoY), std::invalid_argument);
  CycleGanModel<float> plain(small_config(), 1);
  ImageSample big;
  big.image = Image(64, 64);
  big.source_id = "big";
  EXPECT_THROW(plain.translate(big, Direction::kXtoY), ShapeError);
}

TEST(CycleGan, LossCsvRow) {
  LossRecord r{3, 0.5, 0.25, 1.0, 2.0, 21.0};
  EXPECT_EQ(to_csv_row(r), "3,0.5,0.25,1,2,21");
  EXPECT_EQ(std::string(kLossCsvHeader), "step,loss_d_x,loss_d_y,loss_g_adv,loss_cyc,loss_total");
}
