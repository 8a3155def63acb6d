#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "iqlut/calibration.hpp"
#include "iqlut/dataset.hpp"
#include "iqlut/ecnn.hpp"
#include "iqlut/error.hpp"
#include "iqlut/trainer.hpp"
#include "synthetic.hpp"

namespace iqlut {
namespace {

TrainingSample random_sample(const ModelSpec& spec, std::uint64_t seed, int h = 4, int w = 5) {
  return {testing::random_plane(seed, h, w), testing::random_plane(seed + 1, h * spec.upscale, w * spec.upscale)};
}

TeacherTargets random_teacher(const ModelSpec& spec, std::uint64_t seed, int h = 4, int w = 5) {
  TeacherTargets t;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int b = 0; b < spec.layers; ++b) {
    FeatureTensor f(spec.channels, h, w);
    for (double& v : f.values()) v = u(rng);
    t.block_outputs.push_back(f);
  }
  t.output = testing::random_plane(seed + 7, h * spec.upscale, w * spec.upscale);
  return t;
}

TEST(LossTotal, ZeroAtTheMinimum) {
  const ImagePlane p = testing::random_plane(1, 6, 6);
  const std::vector<FeatureTensor> feats{FeatureTensor(2, 3, 3, 0.25)};
  TeacherTargets t{feats, p};
  TrainConfig cfg;
  LossGradients g;
  const LossTerms l = loss_total(p, p, feats, &t, cfg, &g);
  EXPECT_EQ(l.total, 0.0);
  for (double v : g.d_pred.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.d_features[0].values()) EXPECT_EQ(v, 0.0);
}

TEST(LossTotal, PretrainIsPlainMse) {
  const ImagePlane p = testing::random_plane(2, 5, 7);
  const ImagePlane q = testing::random_plane(3, 5, 7);
  double mse = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mse += std::pow(p.values()[i] - q.values()[i], 2);
  mse /= static_cast<double>(p.size());
  TrainConfig cfg;
  const LossTerms l = loss_total(p, q, {}, nullptr, cfg);
  EXPECT_NEAR(l.total, mse, 1e-15);
  EXPECT_EQ(l.distill, 0.0);
}

TEST(LossTotal, DistillTermAveragesPairedMses) {
  const ImagePlane p(2, 2, 0.0), target(2, 2, 0.0), teacher_out(2, 2, 1.0);
  const std::vector<FeatureTensor> feats{FeatureTensor(1, 1, 1, 0.0), FeatureTensor(1, 1, 1, 0.0)};
  const TeacherTargets t{{FeatureTensor(1, 1, 1, 2.0), FeatureTensor(1, 1, 1, 0.0)}, teacher_out};
  TrainConfig cfg;
  cfg.stage = TrainStage::kFinetune;
  // Terms: 4, 0 and 1 -> mean 5/3, weighted by 3.
  EXPECT_NEAR(loss_total(p, target, feats, &t, cfg).total, 5.0, 1e-15);
  cfg.distill_target = DistillTarget::kFeatures;
  EXPECT_NEAR(loss_total(p, target, feats, &t, cfg).total, 6.0, 1e-15);
  cfg.distill_target = DistillTarget::kOutputs;
  EXPECT_NEAR(loss_total(p, target, feats, &t, cfg).total, 3.0, 1e-15);
}

TEST(LossTotal, Errors) {
  TrainConfig cfg;
  EXPECT_THROW(loss_total(ImagePlane(2, 2), ImagePlane(2, 3), {}, nullptr, cfg), ConfigError);
  cfg.stage = TrainStage::kFinetune;
  EXPECT_THROW(loss_total(ImagePlane(2, 2), ImagePlane(2, 2), {}, nullptr, cfg), ConfigError);
  cfg.distill_weight = 0.0;
  EXPECT_NO_THROW(loss_total(ImagePlane(2, 2), ImagePlane(2, 2), {}, nullptr, cfg));
}

TEST(Gradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const ModelSpec spec = testing::random_spec(seed + 10, 2, 3);
    const Model m = testing::random_model(spec, seed + 20, 0.5);
    const TrainingSample s = random_sample(spec, seed + 30);
    const TeacherTargets t = random_teacher(spec, seed + 40);
    TrainConfig cfg;
    const auto r = testing::gradient_check(m, s, cfg, seed % 2 ? &t : nullptr, {}, {});
    EXPECT_LE(r.worst_relative, 1e-4) << seed << " " << r.worst_tensor;
    EXPECT_EQ(r.checked, parameter_count(m));
  }
}

TEST(Gradients, StraightThroughMatchesFrozenOffsetSurrogate) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ModelSpec spec = testing::random_spec(seed + 50, 2, 3);
    const Model m = testing::random_model(spec, seed + 60, 0.5);
    const TrainingSample s = random_sample(spec, seed + 70);
    const TeacherTargets t = random_teacher(spec, seed + 80);
    TrainConfig cfg;
    cfg.stage = TrainStage::kFinetune;
    const auto tables = make_block_functions(m, ForwardMode::kQuantized, QuantScheme::kNonUniform);
    std::vector<PixelOutputs> offsets;
    QuantizationContext ste{&tables, nullptr, &offsets};
    const LossTerms ste_loss = sample_gradient(m, s, cfg, &t, ste);
    QuantizationContext surrogate{nullptr, &offsets, nullptr};
    EXPECT_NEAR(sample_gradient(m, s, cfg, &t, surrogate).total, ste_loss.total, 1e-12);
    const auto r = testing::gradient_check(m, s, cfg, &t, ste, surrogate);
    EXPECT_LE(r.worst_relative, 1e-4) << seed << " " << r.worst_tensor;
  }
}

TEST(Gradients, QuantizedForwardValueIsTheTablePath) {
  const ModelSpec spec = make_model_spec(2, 3, 2, KernelShape{2, 2}, {4, 3, 3});
  const Model m = testing::random_model(spec, 5, 0.4);
  const TrainingSample s = random_sample(spec, 6);
  TrainConfig cfg;
  cfg.stage = TrainStage::kFinetune;
  cfg.distill_weight = 0.0;
  const auto tables = make_block_functions(m, ForwardMode::kQuantized, QuantScheme::kNonUniform);
  const LossTerms l = sample_gradient(m, s, cfg, nullptr, {&tables, nullptr, nullptr});
  ForwardOptions fo;
  fo.mode = ForwardMode::kQuantized;
  fo.clamp_output = false;
  const ImagePlane pred = forward_full(s.lr, m, fo);
  EXPECT_NEAR(l.total, loss_total(pred, s.hr, {}, nullptr, cfg).total, 1e-12);
}

TEST(Schedule, HalvesAtMilestones) {
  TrainConfig cfg;
  cfg.iterations = 1000;
  cfg.learning_rate = 1e-4;
  const double fractions[] = {0.19, 0.21, 0.41, 0.61, 0.81};
  const double factors[] = {1, 0.5, 0.25, 0.125, 0.0625};
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(scheduled_lr(cfg, std::lround(fractions[i] * cfg.iterations)), factors[i] * 1e-4);
  }
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 0), 1e-4);
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 200), 0.5e-4);
}

class TrainSteps : public ::testing::Test {
 protected:
  ModelSpec spec = make_model_spec(1, 2, 2, KernelShape{2, 2}, {4, 3});
  std::vector<TrainingSample> batch{random_sample(spec, 1, 6, 6), random_sample(spec, 3, 6, 6)};

  Model fresh() const {
    Model m = make_model(spec);
    initialize_model(m, 9);
    return m;
  }
};

TEST_F(TrainSteps, ZeroLearningRateMovesOnlyMoments) {
  Model m = fresh();
  const Model before = m;
  AdamState adam;
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  train_step(m, adam, batch, cfg, 0);
  EXPECT_EQ(m, before);
  EXPECT_EQ(adam.step, 1);
  double norm = 0.0;
  for (double v : adam.m) norm += std::abs(v);
  EXPECT_GT(norm, 0.0);
}

TEST_F(TrainSteps, SmallStepDecreasesLossOnALinearToy) {
  // Positive hidden biases and weights keep every ReLU active on [0, 1], so
  // each subnet is affine in its parameters' neighbourhood.
  Model m = make_model(spec);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  for (Block& b : m.blocks) {
    for (SubnetParams& p : b.subnets) {
      for (int s = 0; s < 2; ++s) {
        for (double& w : p.stages[s].weight) w = u(rng);
        for (double& v : p.stages[s].bias) v = 3.0 + u(rng);
      }
      for (double& w : p.stages[2].weight) w = u(rng) - 0.3;
    }
  }
  const std::vector<TrainingSample> one{batch[0]};
  TrainConfig cfg;
  cfg.learning_rate = 1e-5;
  AdamState adam;
  const double before = train_step(m, adam, one, cfg, 0).loss.total;
  const double after = sample_gradient(m, one[0], cfg, nullptr, {}).total;
  EXPECT_LT(after, before);
}

TEST_F(TrainSteps, DeterministicAcrossRunsAndThreads) {
  auto run = [&](int threads) {
    Model m = fresh();
    AdamState adam;
    TrainConfig cfg;
    cfg.threads = threads;
    for (long it = 0; it < 5; ++it) train_step(m, adam, batch, cfg, it);
    return flatten_parameters(m);
  };
  const auto a = run(1);
  EXPECT_EQ(a, run(1));
  EXPECT_EQ(a, run(3));
}

TEST_F(TrainSteps, NonFiniteLossAborts) {
  Model m = fresh();
  AdamState adam;
  std::vector<TrainingSample> bad = batch;
  bad[1].hr(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train_step(m, adam, bad, TrainConfig{}, 0), NumericalError);
}

class Distillation : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = std::make_unique<BatchStream>(testing::synthetic_set(3, 4, 48, 48),
                                          DatasetOptions{4, 24, 5, true});
    Model m = make_model(make_model_spec(1, 2, 4, KernelShape{2, 2}, {4, 3}));
    initialize_model(m, 3);
    state_.model = m;
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.batch_size = 4;
    train(state_, *data_, cfg, nullptr);
    teacher_model_ = make_teacher_model(state_.model, data_->lr_images());
    calibrate_ranges(state_.model, data_->lr_images());
    state_.adam = {};
    state_.iteration = 0;
  }

  TrainConfig finetune_cfg(double distill_weight) const {
    TrainConfig cfg;
    cfg.stage = TrainStage::kFinetune;
    cfg.iterations = 10;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-4;
    cfg.distill_weight = distill_weight;
    return cfg;
  }

  std::unique_ptr<BatchStream> data_;
  TrainState state_;
  Model teacher_model_;
};

TEST_F(Distillation, ZeroWeightEqualsPlainFinetune) {
  const Teacher teacher(teacher_model_);
  const std::string rng = data_->rng_state();
  TrainState a = state_;
  distill(a, teacher, *data_, finetune_cfg(0.0));
  data_->set_rng_state(rng);
  TrainState b = state_;
  train(b, *data_, finetune_cfg(0.0), nullptr);
  EXPECT_EQ(a, b);
}

TEST_F(Distillation, TeacherStaysFrozenAndLossDoesNotRise) {
  const Teacher teacher(teacher_model_);
  const std::uint64_t hash = teacher.hash();
  const TrainConfig cfg = finetune_cfg(3.0);
  const auto eval_batch = BatchStream(testing::synthetic_set(4, 2, 48, 48), DatasetOptions{4, 24, 6, false}).next_batch(6);
  auto loss = [&](const Model& m) {
    const auto tables = make_block_functions(m, ForwardMode::kQuantized, QuantScheme::kNonUniform);
    double acc = 0.0;
    for (const TrainingSample& s : eval_batch) {
      const TeacherTargets t = teacher.targets(s.lr);
      acc += sample_gradient(m, s, cfg, &t, {&tables, nullptr, nullptr}).total;
    }
    return acc;
  };
  const double before = loss(state_.model);
  TrainState s = state_;
  distill(s, teacher, *data_, cfg);
  EXPECT_EQ(teacher.hash(), hash);
  EXPECT_LE(loss(s.model), before);
}

TEST_F(Distillation, BlockCountMismatchRejected) {
  Model other = make_model(make_model_spec(2, 2, 4, KernelShape{2, 2}, {8, 8, 8}));
  for (BlockQuant& q : other.spec.quant) q.calibrated = true;
  const Teacher teacher(other);
  TrainState s = state_;
  EXPECT_THROW(distill(s, teacher, *data_, finetune_cfg(3.0)), ConfigError);
}

TEST(TrainLoop, FinetuneNeedsCalibration) {
  BatchStream data(testing::synthetic_set(1, 1, 32, 32), DatasetOptions{2, 16, 1, true});
  TrainState s;
  s.model = make_model(make_model_spec(1, 2, 2, KernelShape{2, 2}, {4, 3}));
  TrainConfig cfg;
  cfg.stage = TrainStage::kFinetune;
  cfg.distill_weight = 0.0;
  cfg.iterations = 1;
  EXPECT_THROW(train(s, data, cfg, nullptr), ConfigError);
}

TEST(TrainLoop, LoggerSeesEveryIteration) {
  BatchStream data(testing::synthetic_set(1, 2, 32, 32), DatasetOptions{2, 16, 1, true});
  TrainState s;
  s.model = make_model(make_model_spec(1, 2, 2, KernelShape{2, 2}, {4, 3}));
  initialize_model(s.model, 1);
  TrainConfig cfg;
  cfg.iterations = 7;
  cfg.batch_size = 2;
  std::vector<long> seen;
  train(s, data, cfg, nullptr, [&](const TrainRecord& r) { seen.push_back(r.iteration); });
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(s.iteration, 7);
  EXPECT_EQ(s.adam.step, 7);
}

}  // namespace
}  // namespace iqlut
