#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gradcheck.hpp"
#include "stitchvton/adam.hpp"
#include "stitchvton/checkpoint.hpp"
#include "stitchvton/errors.hpp"
#include "stitchvton/parameters.hpp"

namespace stitchvton {
namespace {

using testing::gradcheck;
using testing::random_tensor;

TEST(Tensor, RejectsNonFiniteValues) {
  EXPECT_THROW(Tensor({1, 1, 1, 2}, {1.0f, std::nanf("")}), NumericError);
  EXPECT_THROW(Tensor({1, 1, 1, 1}, {INFINITY}), NumericError);
}

TEST(Tensor, RejectsSizeMismatch) { EXPECT_THROW(Tensor({1, 1, 2, 2}, {1.0f, 2.0f}), ShapeError); }

TEST(Tensor, IndexingIsRowMajorNchw) {
  std::vector<float> v(2 * 3 * 4 * 5);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
  const Tensor t({2, 3, 4, 5}, v);
  EXPECT_EQ(t.at(1, 2, 3, 4), 119.0f);
  EXPECT_EQ(t.at(0, 1, 0, 0), 20.0f);
}

TEST(Conv2d, IdentityKernelPicksCenter) {
  // 3x3 kernel with a single 1 at the center, no padding, on a 3x3 input.
  const nn::Var x = nn::constant(Tensor({1, 1, 3, 3}, {1, 2, 0, 3, 5, 0, 0, 0, 0}));
  std::vector<float> k(9, 0.0f);
  k[4] = 1.0f;
  const nn::Var w = nn::constant(Tensor({1, 1, 3, 3}, k));
  const nn::Var b = nn::constant(Tensor::zeros({1, 1, 1, 1}));
  const nn::Var y = nn::conv2d(x, w, b, 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.value().data()[0], 5.0f);
}

TEST(Conv2d, SumKernelOverTwoByTwo) {
  const nn::Var x = nn::constant(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  const nn::Var w = nn::constant(Tensor::filled({1, 1, 2, 2}, 1.0f));
  const nn::Var b = nn::constant(Tensor::filled({1, 1, 1, 1}, 0.5f));
  EXPECT_EQ(nn::conv2d(x, w, b, 1, 0).value().data()[0], 10.5f);
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  const nn::Var x = nn::constant(Tensor::zeros({1, 2, 4, 4}));
  const nn::Var w = nn::constant(Tensor::zeros({1, 3, 3, 3}));
  const nn::Var b = nn::constant(Tensor::zeros({1, 1, 1, 1}));
  EXPECT_THROW(nn::conv2d(x, w, b, 1, 1), ShapeError);
}

TEST(Ops, AvgPoolNeedsEvenDims) {
  EXPECT_THROW(nn::avg_pool2x(nn::constant(Tensor::zeros({1, 1, 3, 4}))), ShapeError);
}

TEST(Ops, SliceWidthOutOfRange) {
  EXPECT_THROW(nn::slice_width(nn::constant(Tensor::zeros({1, 1, 2, 4})), 3, 2), ShapeError);
}

TEST(Ops, GroupNormNormalizesEachGroup) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor({1, 4, 3, 3}, rng, -2.0, 5.0);
  const auto y = nn::group_norm(nn::constant(x), nn::constant(BasicTensor<double>::filled({1, 4, 1, 1}, 1.0)),
                                nn::constant(BasicTensor<double>::zeros({1, 4, 1, 1})), 2)
                     .value();
  for (int g = 0; g < 2; ++g) {
    double mean = 0, sq = 0;
    for (int c = 2 * g; c < 2 * g + 2; ++c) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          mean += y.at(0, c, i, j) / 18.0;
          sq += y.at(0, c, i, j) * y.at(0, c, i, j) / 18.0;
        }
      }
    }
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(sq, 1.0, 1e-3);
  }
}

TEST(Autograd, NonScalarLossIsContractError) {
  EXPECT_THROW(nn::backprop(nn::parameter(Tensor::zeros({1, 1, 2, 1}))), ContractError);
}

TEST(Autograd, UnusedLeafHasNoGradientEntry) {
  const nn::Var a = nn::parameter(Tensor::filled({1, 1, 1, 1}, 2.0f));
  const nn::Var b = nn::parameter(Tensor::filled({1, 1, 1, 1}, 3.0f));
  const auto g = nn::backprop(nn::sum(a));
  EXPECT_EQ(g.of(a).data()[0], 1.0f);
  EXPECT_THROW(g.of(b), ContractError);
}

TEST(Autograd, SharedSubgraphAccumulates) {
  const nn::Var a = nn::parameter(Tensor::filled({1, 1, 1, 3}, 1.0f));
  const auto g = nn::backprop(nn::sum(nn::add(a, a)));
  for (float v : g.of(a).data()) EXPECT_EQ(v, 2.0f);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const auto cases = testing::gradient_cases();
  const auto& c = cases.at(GetParam());
  std::mt19937_64 rng(100 + GetParam());
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<testing::TensorD> inputs;
    for (const Shape& s : c.shapes) inputs.push_back(random_tensor(s, rng));
    EXPECT_LT(gradcheck(c.fn, inputs, rng), 1e-3) << c.name;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradientCheck,
                         ::testing::Range(0, static_cast<int>(testing::gradient_cases().size())),
                         [](const auto& info) { return testing::gradient_cases().at(info.param).name; });

TEST(Adam, FirstStepMovesEachWeightByLr) {
  nn::ParameterSet p{{"w", Tensor({1, 1, 1, 3}, {1.0f, -2.0f, 0.5f})}};
  const nn::GradientMap g{{"w", Tensor({1, 1, 1, 3}, {0.3f, -4.0f, 1e-2f})}};
  nn::AdamState st;
  st.lr = 1e-3f;
  nn::adam_step(p, g, st);
  // Bias correction makes the first update lr * sign(g) up to eps.
  EXPECT_NEAR(p.at("w").data()[0], 1.0f - 1e-3f, 1e-6);
  EXPECT_NEAR(p.at("w").data()[1], -2.0f + 1e-3f, 1e-6);
  EXPECT_NEAR(p.at("w").data()[2], 0.5f - 1e-3f, 1e-6);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, MissingGradientIsContractError) {
  nn::ParameterSet p{{"a", Tensor::zeros({1, 1, 1, 1})}, {"b", Tensor::zeros({1, 1, 1, 1})}};
  nn::AdamState st;
  EXPECT_THROW(nn::adam_step(p, {{"a", Tensor::zeros({1, 1, 1, 1})}}, st), ContractError);
}

TEST(Adam, MinimizesQuadratic) {
  nn::ParameterSet p{{"x", Tensor::filled({1, 1, 1, 1}, 3.0f)}};
  nn::AdamState st;
  st.lr = 0.05f;
  for (int i = 0; i < 400; ++i) {
    nn::ParamBinder bind(p, true);
    const nn::Var loss = nn::mse(bind("x"), nn::constant(Tensor::filled({1, 1, 1, 1}, -1.0f)));
    nn::adam_step(p, bind.gradients(nn::backprop(loss)), st);
  }
  EXPECT_NEAR(p.at("x").data()[0], -1.0f, 0.05f);
}

TEST(Parameters, ReduceGradientsSumsInOrder) {
  const std::vector<nn::GradientMap> maps = {{{"a", Tensor::filled({1, 1, 1, 2}, 1.0f)}}, {{"a", Tensor::filled({1, 1, 1, 2}, 3.0f)}}};
  const auto r = nn::reduce_gradients(maps, 0.5f);
  EXPECT_EQ(r.at("a").data()[1], 2.0f);
}

TEST(Parameters, KaimingBound) {
  std::mt19937_64 rng(1);
  const Tensor w = nn::kaiming_uniform({8, 6, 3, 3}, rng);
  const float bound = std::sqrt(6.0f / 54.0f);
  for (float v : w.data()) EXPECT_LE(std::abs(v), bound);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  std::mt19937_64 rng(5);
  Checkpoint c{R"({"k":1})", {{"conv.w", nn::kaiming_uniform({4, 3, 3, 3}, rng)}, {"b", Tensor::filled({1, 1, 1, 4}, 0.25f)}}};
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(c));
  EXPECT_EQ(back.config_json, c.config_json);
  ASSERT_EQ(back.params.size(), 2u);
  EXPECT_EQ(back.params.at("b").shape(), (Shape{1, 1, 1, 4}));
  const auto a = c.params.at("conv.w").data(), b = back.params.at("conv.w").data();
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(Checkpoint, DetectsCorruption) {
  Checkpoint c{"{}", {{"w", Tensor::filled({1, 1, 1, 3}, 1.0f)}}};
  auto bytes = serialize_checkpoint(c);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint(flipped), IoError);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_checkpoint(bytes), IoError);
  EXPECT_THROW(deserialize_checkpoint({'N', 'O', 'P', 'E', 0, 0, 0, 0}), IoError);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint(std::filesystem::temp_directory_path() / "stitchvton_no_such.ckpt"), IoError);
}

}  // namespace
}  // namespace stitchvton
