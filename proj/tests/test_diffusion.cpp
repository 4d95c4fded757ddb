#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "stitchvton/errors.hpp"
#include "stitchvton/io.hpp"
#include "stitchvton/sampler.hpp"
#include "stitchvton/schedule.hpp"
#include "stitchvton/trainer.hpp"

namespace stitchvton {
namespace {

Tensor normal_tensor(Shape s, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(s.numel());
  for (float& x : v) x = n(rng);
  return Tensor(s, v);
}

float max_abs_diff(const Tensor& a, const Tensor& b) { return (a.array() - b.array()).abs().maxCoeff(); }

DenoiserConfig tiny_net() {
  DenoiserConfig c;
  c.base_width = 8;
  c.levels = 2;
  c.blocks_per_level = 1;
  c.time_dim = 16;
  c.groups = 2;
  return c;
}

std::vector<synth::SpriteSample> tiny_corpus(int n, bool transfer = false) {
  std::vector<synth::SpriteSample> out;
  for (int i = 0; i < n; ++i) {
    auto rng = synth::sample_rng(42, i);
    out.push_back(synth::make_sample(rng, transfer, 32));
  }
  return out;
}

TEST(Schedule, CumulativeTable) {
  const NoiseSchedule s;
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  for (int t = 1; t <= 1000; ++t) {
    EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    EXPECT_GT(s.alpha_bar(t), 0.0);
  }
  EXPECT_NEAR(s.alpha_bar(1), 1.0 - 1e-4, 1e-12);
  EXPECT_NEAR(s.beta(1000), 0.02, 1e-12);
  EXPECT_THROW(s.alpha_bar(1001), ContractError);
  EXPECT_THROW(s.alpha_bar(-1), ContractError);
}

TEST(Schedule, DdimLadder) {
  const auto ts = NoiseSchedule{}.ddim_timesteps(25);
  ASSERT_EQ(ts.size(), 26u);
  EXPECT_EQ(ts.front(), 1000);
  EXPECT_EQ(ts[1], 960);
  EXPECT_EQ(ts[24], 40);
  EXPECT_EQ(ts.back(), 0);
}

TEST(Schedule, ConfigRejectsUnknownKeys) {
  nlohmann::json j = ScheduleConfig{}.to_json();
  j["cosine"] = true;
  EXPECT_THROW(ScheduleConfig::from_json(j), ContractError);
}

TEST(ForwardDiffuse, Endpoints) {
  std::mt19937_64 rng(1);
  const NoiseSchedule s;
  const Tensor x0 = normal_tensor({1, 4, 4, 4}, rng), eps = normal_tensor({1, 4, 4, 4}, rng);
  EXPECT_EQ(forward_diffuse(s, x0, 0, eps).to_vector(), x0.to_vector());
  EXPECT_LT(max_abs_diff(forward_diffuse_at(x0, 0.0, eps), eps), 1e-7);
  EXPECT_THROW(forward_diffuse(s, x0, 1001, eps), ContractError);
}

TEST(ForwardDiffuse, QuarterSignal) {
  const Tensor out = forward_diffuse_at(Tensor::zeros({1, 4, 2, 2}), 0.25, Tensor::filled({1, 4, 2, 2}, 1.0f));
  for (float v : out.data()) EXPECT_NEAR(v, 0.8660254f, 1e-6);
}

TEST(PredictX0, InvertsForwardDiffuse) {
  std::mt19937_64 rng(2);
  const NoiseSchedule s;
  for (int t : {0, 1, 10, 250, 500, 999}) {
    const Tensor x0 = normal_tensor({1, 4, 8, 8}, rng), eps = normal_tensor({1, 4, 8, 8}, rng);
    const BasicTensor<double> x0d = x0.cast<double>(), epsd = eps.cast<double>();
    const auto back = predict_x0(s, forward_diffuse(s, x0d, t, epsd), epsd, t);
    EXPECT_LT((back.array() - x0d.array()).abs().maxCoeff(), 1e-5) << t;
    // Float storage of x_t costs one ulp, amplified by 1 / sqrt(alpha_bar).
    const double bound = 4e-7 * (1.0 + 4.0 / std::sqrt(s.alpha_bar(t)));
    EXPECT_LT(max_abs_diff(predict_x0(s, forward_diffuse(s, x0, t, eps), eps, t), x0), bound) << t;
  }
  const Tensor x = normal_tensor({1, 4, 2, 2}, rng);
  EXPECT_EQ(predict_x0(s, x, normal_tensor({1, 4, 2, 2}, rng), 0).to_vector(), x.to_vector());
  EXPECT_THROW(predict_x0_at(x, x, 0.0), NumericError);
}

TEST(EpsFromX0, RecoversForwardNoise) {
  std::mt19937_64 rng(12);
  const NoiseSchedule s;
  for (int t : {1, 100, 999}) {
    const Tensor x0 = normal_tensor({1, 4, 4, 4}, rng), eps = normal_tensor({1, 4, 4, 4}, rng);
    EXPECT_LT(max_abs_diff(eps_from_x0(s, forward_diffuse(s, x0, t, eps), x0, t), eps), 2e-3) << t;
  }
  const Tensor x = normal_tensor({1, 4, 2, 2}, rng);
  EXPECT_THROW(eps_from_x0(s, x, x, 0), NumericError);
}

TEST(Ddim, StepWithImpliedNoiseLandsOnX0Estimate) {
  // Feeding eps_from_x0 back into ddim_step must reproduce the given x0 at t_prev = 0.
  std::mt19937_64 rng(13);
  const NoiseSchedule s;
  const Tensor xt = normal_tensor({1, 4, 4, 4}, rng), x0 = normal_tensor({1, 4, 4, 4}, rng);
  EXPECT_LT(max_abs_diff(ddim_step(s, xt, eps_from_x0(s, xt, x0, 640), 640, 0), x0), 1e-5);
}

TEST(Ddim, StepToZeroIsPredictedX0) {
  std::mt19937_64 rng(3);
  const NoiseSchedule s;
  const Tensor xt = normal_tensor({1, 4, 4, 4}, rng), eps = normal_tensor({1, 4, 4, 4}, rng);
  EXPECT_LT(max_abs_diff(ddim_step(s, xt, eps, 400, 0), predict_x0(s, xt, eps, 400)), 1e-6);
}

TEST(Ddim, OracleNoiseIsScheduleConsistent) {
  std::mt19937_64 rng(4);
  const NoiseSchedule s;
  const Tensor x0 = normal_tensor({1, 4, 4, 4}, rng), eps = normal_tensor({1, 4, 4, 4}, rng);
  const Tensor xt = forward_diffuse(s, x0, 600, eps);
  EXPECT_LT(max_abs_diff(ddim_step(s, xt, eps, 600, 560), forward_diffuse(s, x0, 560, eps)), 1e-5);
}

TEST(Ddim, FullLadderWithOracleNoiseRecoversX0) {
  std::mt19937_64 rng(5);
  const NoiseSchedule s;
  const Tensor x0 = normal_tensor({1, 4, 8, 8}, rng), eps = normal_tensor({1, 4, 8, 8}, rng);
  const auto ladder = s.ddim_timesteps(25);
  Tensor x = forward_diffuse(s, x0, ladder.front(), eps);
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) x = ddim_step(s, x, eps, ladder[k], ladder[k + 1]);
  EXPECT_LT(max_abs_diff(x, x0), 1e-4);
}

TEST(Ddim, OrderingAndDeterminism) {
  std::mt19937_64 rng(6);
  const NoiseSchedule s;
  const Tensor x = normal_tensor({1, 4, 4, 4}, rng), e = normal_tensor({1, 4, 4, 4}, rng);
  EXPECT_THROW(ddim_step(s, x, e, 100, 100), ContractError);
  EXPECT_THROW(ddim_step(s, x, e, 100, 200), ContractError);
  EXPECT_EQ(ddim_step(s, x, e, 500, 460).to_vector(), ddim_step(s, x, e, 500, 460).to_vector());
}

TEST(Cfg, Combination) {
  std::mt19937_64 rng(7);
  const Tensor c = normal_tensor({1, 4, 2, 2}, rng), u = normal_tensor({1, 4, 2, 2}, rng);
  EXPECT_LT(max_abs_diff(cfg_noise(c, u, 1.0f), c), 1e-7);
  EXPECT_LT(max_abs_diff(cfg_noise(c, c, 7.5f), c), 1e-6);
  const Tensor g = cfg_noise(Tensor::filled({1, 4, 1, 1}, 0.2f), Tensor::zeros({1, 4, 1, 1}), 5.0f);
  for (float v : g.data()) EXPECT_NEAR(v, 1.0f, 1e-6);
}

TEST(Denoiser, OutputMatchesInputSpatialDims) {
  const DenoiserNet net = DenoiserNet::create(tiny_net(), 1);
  std::mt19937_64 rng(8);
  for (int w : {8, 16, 24}) {
    const int ts[2] = {10, 900};
    const Tensor out = net.predict(normal_tensor({2, 9, 4, w}, rng), ts);
    EXPECT_EQ(out.shape(), (Shape{2, 4, 4, w}));
  }
}

TEST(Denoiser, ParameterCountIsModeIndependent) {
  // The network sees a 9-channel input in every mode; only the width changes.
  const DenoiserNet net = DenoiserNet::create({}, 0);
  std::mt19937_64 rng(9);
  for (auto m : all_modes()) {
    const int ts[1] = {500};
    const Tensor out = net.predict(normal_tensor({1, 9, 8, 8 * width_multiplier(m)}, rng), ts);
    EXPECT_EQ(out.shape().w, 8 * width_multiplier(m));
    EXPECT_EQ(DenoiserNet::create({}, 7).parameter_count(), net.parameter_count());
  }
}

TEST(Denoiser, ContractsOnInputs) {
  const DenoiserNet net = DenoiserNet::create(tiny_net(), 1);
  const int one[1] = {5};
  const int two[2] = {5, 6};
  EXPECT_THROW(net.predict(Tensor::zeros({1, 9, 3, 8}), one), ShapeError);
  EXPECT_THROW(net.predict(Tensor::zeros({1, 8, 4, 8}), one), ShapeError);
  EXPECT_THROW(net.predict(Tensor::zeros({1, 9, 4, 8}), two), ShapeError);
  nn::ParameterSet broken = net.params();
  broken.erase(broken.begin());
  EXPECT_THROW(DenoiserNet(tiny_net(), broken), ContractError);
}

TEST(Denoiser, TimestepEmbedding) {
  const int ts[2] = {0, 17};
  const Tensor e = timestep_embedding(ts, 8);
  EXPECT_EQ(e.shape(), (Shape{2, 8, 1, 1}));
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(e.at(0, i, 0, 0), 0.0f);
    EXPECT_EQ(e.at(0, 4 + i, 0, 0), 1.0f);
  }
  EXPECT_NEAR(e.at(1, 0, 0, 0), std::sin(17.0f), 1e-6);
}

TEST(Training, MaskStrategyMix) {
  std::mt19937_64 rng(10);
  int fine = 0;
  for (int i = 0; i < 10000; ++i) fine += draw_mask_strategy(rng, 0.5) == MaskStrategy::FineGrained;
  EXPECT_GE(fine, 4800);
  EXPECT_LE(fine, 5200);
  EXPECT_EQ(draw_mask_strategy(rng, 1.0), MaskStrategy::FineGrained);
  EXPECT_EQ(draw_mask_strategy(rng, 0.0), MaskStrategy::BoundingBox);
  EXPECT_THROW(draw_mask_strategy(rng, 1.5), ContractError);
}

TEST(Training, ExamplesHoldModeSpecificLatents) {
  const auto corpus = tiny_corpus(1, true);
  const TrainingExample a = prepare_example(corpus[0], ConditioningMode::PoseConcat, {});
  const TrainingExample b = prepare_example(corpus[0], ConditioningMode::PoseFree, {});
  EXPECT_TRUE(a.by_strategy[0].pose_side.has_value());
  EXPECT_FALSE(b.by_strategy[0].pose_side.has_value());
  EXPECT_TRUE(a.transfer.has_value());
  EXPECT_EQ(a.by_strategy[0].x0.to_vector(), b.by_strategy[1].x0.to_vector());
}

std::vector<double> short_run(ConditioningMode mode, int steps, std::uint64_t seed) {
  std::vector<TrainingExample> ex;
  for (const auto& s : tiny_corpus(6)) ex.push_back(prepare_example(s, mode, {}));
  TrainOptions o;
  o.batch = 3;
  o.seed = seed;
  Trainer tr(DenoiserNet::create(tiny_net(), seed), NoiseSchedule{}, mode, std::move(ex), o);
  return tr.run(steps);
}

TEST(Training, LossIsFiniteAndPositive) {
  for (auto m : all_modes()) {
    const auto l = short_run(m, 2, 1);
    for (double v : l) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GT(v, 0.0);
    }
  }
}

TEST(Training, DeterministicPerSeedAndThreadCount) {
  const auto a = short_run(ConditioningMode::PoseStitchGray, 6, 3);
  ::setenv("STITCHVTON_THREADS", "3", 1);
  const auto b = short_run(ConditioningMode::PoseStitchGray, 6, 3);
  ::unsetenv("STITCHVTON_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, short_run(ConditioningMode::PoseStitchGray, 6, 4));
}

TEST(Training, RejectsBadOptions) {
  std::vector<TrainingExample> ex;
  for (const auto& s : tiny_corpus(1)) ex.push_back(prepare_example(s, ConditioningMode::PoseFree, {}));
  TrainOptions o;
  o.cond_dropout = 1.0;
  EXPECT_THROW(Trainer(DenoiserNet::create(tiny_net(), 0), NoiseSchedule{}, ConditioningMode::PoseFree, ex, o),
               ContractError);
  o = {};
  o.pose_transfer = true;
  EXPECT_THROW(Trainer(DenoiserNet::create(tiny_net(), 0), NoiseSchedule{}, ConditioningMode::PoseFree, ex, o),
               ContractError);
  EXPECT_THROW(Trainer(DenoiserNet::create(tiny_net(), 0), NoiseSchedule{}, ConditioningMode::PoseFree, {}, {}),
               ContractError);
}

TryOnRequest request_for(const synth::SpriteSample& s, ConditioningMode mode, std::uint64_t seed) {
  return {s.person, s.garment, PoseInputs{s.skeleton, s.pose_map}, s.fine, mode, MaskStrategy::FineGrained, seed};
}

TEST(Sampling, SeedDeterministicPngBytes) {
  const TryOnModel model{DenoiserNet::create(tiny_net(), 2), NoiseSchedule{}, {}};
  const auto s = tiny_corpus(1)[0];
  const SamplerConfig cfg{5, 5.0f};
  const auto a = encode_png(sample_tryon(model, request_for(s, ConditioningMode::JointsConcat, 9), cfg));
  const auto b = encode_png(sample_tryon(model, request_for(s, ConditioningMode::JointsConcat, 9), cfg));
  EXPECT_EQ(a, b);
  const auto c = encode_png(sample_tryon(model, request_for(s, ConditioningMode::JointsConcat, 10), cfg));
  EXPECT_NE(a, c);
}

TEST(Sampling, AllKeepReturnsPerson) {
  const TryOnModel model{DenoiserNet::create(tiny_net(), 2), NoiseSchedule{}, {}};
  const auto s = tiny_corpus(1)[0];
  for (auto strategy : {MaskStrategy::FineGrained, MaskStrategy::BoundingBox}) {
    TryOnRequest req = request_for(s, ConditioningMode::PoseStitchGray, 1);
    req.keep = BinaryMask::all_keep(32, 32);
    req.strategy = strategy;
    EXPECT_EQ(sample_tryon(model, req, {3, 5.0f}), s.person);
  }
}

TEST(Sampling, PreservedRegionIsBitIdentical) {
  const TryOnModel model{DenoiserNet::create(tiny_net(), 3), NoiseSchedule{}, {}};
  const auto s = tiny_corpus(1)[0];
  const nn::ParameterSet before = model.net.params();
  for (auto strategy : {MaskStrategy::FineGrained, MaskStrategy::BoundingBox}) {
    TryOnRequest req = request_for(s, ConditioningMode::PoseConcatGray, 4);
    req.strategy = strategy;
    const Image out = sample_tryon(model, req, {4, 5.0f});
    const BinaryMask keep = effective_keep(req.keep, strategy);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        if (keep.keep(y, x)) {
          EXPECT_EQ(out.pixel(y, x), s.person.pixel(y, x));
        }
      }
    }
  }
  for (const auto& [name, t] : before) EXPECT_EQ(t.to_vector(), model.net.params().at(name).to_vector());
}

TEST(Sampling, ClippingAltersOnlyTheEditedRegion) {
  const TryOnModel model{DenoiserNet::create(tiny_net(), 3), NoiseSchedule{}, {}};
  const auto s = tiny_corpus(1)[0];
  const TryOnRequest req = request_for(s, ConditioningMode::PoseStitchGray, 6);
  const Image clipped = sample_tryon(model, req, {4, 5.0f, true});
  const Image raw = sample_tryon(model, req, {4, 5.0f, false});
  EXPECT_EQ(raw, sample_tryon(model, req, {4, 5.0f, false}));
  int differing = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (req.keep.keep(y, x)) {
        EXPECT_EQ(raw.pixel(y, x), s.person.pixel(y, x));
      } else {
        differing += clipped.pixel(y, x) != raw.pixel(y, x);
      }
    }
  }
  EXPECT_GT(differing, 0);
}

TEST(Sampling, MissingPoseIsContractError) {
  const TryOnModel model{DenoiserNet::create(tiny_net(), 2), NoiseSchedule{}, {}};
  TryOnRequest req = request_for(tiny_corpus(1)[0], ConditioningMode::PoseConcat, 1);
  req.pose = {};
  EXPECT_THROW(sample_tryon(model, req, {2, 5.0f}), ContractError);
}

}  // namespace
}  // namespace stitchvton
