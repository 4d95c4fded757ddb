#include <gtest/gtest.h>

#include <random>

#include "mask_oracles.hpp"
#include "stitchvton/conditioning.hpp"
#include "stitchvton/errors.hpp"
#include "stitchvton/mask_ops.hpp"

namespace stitchvton {
namespace {

Tensor random_latent(std::mt19937_64& rng, int h, int w, int c = 4) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(c) * h * w);
  for (float& x : v) x = n(rng);
  return Tensor({1, c, h, w}, v);
}

PoseInputs sample_pose(int size) {
  SkeletonPose s = SkeletonPose::empty();
  s[JointId::Neck] = {"neck", size / 2.0f, size / 4.0f, true};
  s[JointId::RHip] = {"r_hip", size / 2.0f - 4, size / 2.0f, true};
  s[JointId::LHip] = {"l_hip", size / 2.0f + 4, size / 2.0f, true};
  PoseMap pm{LabelPlane::Zero(size, size)};
  pm.labels.block(size / 4, size / 4, size / 2, size / 2).setConstant(2);
  return {s, pm};
}

LatentBundle bundle_for(ConditioningMode mode, int size, std::mt19937_64& rng) {
  const int h = size / 8;
  std::optional<Tensor> pose;
  if (is_concat_mode(mode)) pose = random_latent(rng, h, h);
  BinaryMask keep = BinaryMask::all_keep(h, h);
  keep.set(0, 0, false);
  return assemble_input(mode, random_latent(rng, h, h), random_latent(rng, h, h), random_latent(rng, h, h), pose,
                        edit_plane(keep));
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : all_modes()) {
    EXPECT_EQ(parse_mode(mode_name(m)), m);
  }
  EXPECT_EQ(parse_mode("PoseStitchGray"), ConditioningMode::PoseStitchGray);
  EXPECT_EQ(mode_name(ConditioningMode::JointsConcat), "joints-concat");
  EXPECT_THROW(parse_mode("pose-sideways"), ContractError);
  EXPECT_EQ(parse_strategy("bbox"), MaskStrategy::BoundingBox);
  EXPECT_EQ(parse_strategy("fine"), MaskStrategy::FineGrained);
}

TEST(Modes, WidthMultiplier) {
  EXPECT_EQ(width_multiplier(ConditioningMode::PoseFree), 2);
  EXPECT_EQ(width_multiplier(ConditioningMode::JointsStitch), 2);
  EXPECT_EQ(width_multiplier(ConditioningMode::PoseStitchGray), 2);
  EXPECT_EQ(width_multiplier(ConditioningMode::JointsConcat), 3);
  EXPECT_EQ(width_multiplier(ConditioningMode::PoseConcat), 3);
  EXPECT_EQ(width_multiplier(ConditioningMode::PoseConcatGray), 3);
}

TEST(Assemble, StackedShapes) {
  std::mt19937_64 rng(1);
  for (auto m : all_modes()) {
    const int mult = width_multiplier(m);
    EXPECT_EQ(bundle_for(m, 64, rng).stacked().shape(), (Shape{1, 9, 8, 8 * mult}));
    EXPECT_EQ(bundle_for(m, 512, rng).stacked().shape(), (Shape{1, 9, 64, 64 * mult}));
  }
}

TEST(Assemble, BlockPlacement) {
  std::mt19937_64 rng(2);
  const int h = 8;
  const Tensor xt = random_latent(rng, h, h), masked = random_latent(rng, h, h), garment = random_latent(rng, h, h),
               pose = random_latent(rng, h, h);
  BinaryMask keep = BinaryMask::all_keep(h, h);
  keep.set(3, 4, false);
  const Tensor s =
      assemble_input(ConditioningMode::PoseConcat, xt, masked, garment, pose, edit_plane(keep)).stacked();
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < h; ++x) {
        EXPECT_EQ(s.at(0, c, y, x), xt.at(0, c, y, x));
        EXPECT_EQ(s.at(0, c, y, x + h), 0.0f);
        EXPECT_EQ(s.at(0, c, y, x + 2 * h), 0.0f);
        EXPECT_EQ(s.at(0, 4 + c, y, x), masked.at(0, c, y, x));
        EXPECT_EQ(s.at(0, 4 + c, y, x + h), garment.at(0, c, y, x));
        EXPECT_EQ(s.at(0, 4 + c, y, x + 2 * h), pose.at(0, c, y, x));
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < 3 * h; ++x) {
      const float expect = (y == 3 && x == 4) ? 1.0f : 0.0f;
      EXPECT_EQ(s.at(0, 8, y, x), expect);
    }
  }
}

TEST(Assemble, ZeroInputsGiveZeroBundle) {
  const Tensor z = Tensor::zeros({1, 4, 8, 8});
  const Tensor s = assemble_input(ConditioningMode::JointsConcat, z, z, z, z, Tensor::zeros({1, 1, 8, 8})).stacked();
  EXPECT_EQ(s.array().abs().maxCoeff(), 0.0f);
}

TEST(Assemble, PoseSidePresenceMustMatchMode) {
  const Tensor z = Tensor::zeros({1, 4, 8, 8}), e = Tensor::zeros({1, 1, 8, 8});
  EXPECT_THROW(assemble_input(ConditioningMode::PoseConcat, z, z, z, std::nullopt, e), ContractError);
  EXPECT_THROW(assemble_input(ConditioningMode::PoseStitchGray, z, z, z, z, e), ContractError);
}

TEST(Assemble, WidthMismatchIsShapeError) {
  const Tensor z = Tensor::zeros({1, 4, 8, 8}), e = Tensor::zeros({1, 1, 8, 8});
  EXPECT_THROW(assemble_input(ConditioningMode::PoseFree, z, z, Tensor::zeros({1, 4, 8, 6}), std::nullopt, e),
               ShapeError);
}

TEST(Crop, HalfAndThird) {
  std::mt19937_64 rng(3);
  const Tensor a = random_latent(rng, 8, 16), b = random_latent(rng, 8, 24);
  const Tensor ca = crop_output(a, 2), cb = crop_output(b, 3);
  EXPECT_EQ(ca.shape(), (Shape{1, 4, 8, 8}));
  EXPECT_EQ(cb.shape(), (Shape{1, 4, 8, 8}));
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        EXPECT_EQ(ca.at(0, c, y, x), a.at(0, c, y, x));
        EXPECT_EQ(cb.at(0, c, y, x), b.at(0, c, y, x));
      }
    }
  }
  EXPECT_EQ(crop_output(a, 1).to_vector(), a.to_vector());
  EXPECT_THROW(crop_output(random_latent(rng, 8, 10), 3), ShapeError);
}

TEST(Crop, IdentityNetworkRoundTrip) {
  std::mt19937_64 rng(4);
  for (auto m : all_modes()) {
    const LatentBundle b = bundle_for(m, 64, rng);
    // An identity network returns its first four channels unchanged.
    const Tensor stacked = b.stacked();
    const Shape s = stacked.shape();
    std::vector<float> first4(stacked.data().begin(), stacked.data().begin() + 4 * s.h * s.w);
    const Tensor out = crop_output(Tensor({1, 4, s.h, s.w}, first4), m);
    const Tensor xt = crop_output(b.x_noisy, m);
    EXPECT_EQ(out.to_vector(), xt.to_vector()) << mode_name(m);
  }
}

TEST(Condition, PoseFreeIgnoresPose) {
  std::mt19937_64 rng(5);
  const Image person = testing::random_image(rng, 32, 32);
  const BinaryMask keep = testing::random_mask(rng, 32, 32);
  const ConditionImages c = build_condition_image(ConditioningMode::PoseFree, person, keep, sample_pose(32));
  EXPECT_EQ(c.masked_person, apply_keep(person, keep));
  EXPECT_FALSE(c.side_pose.has_value());
  const ConditionImages none = build_condition_image(ConditioningMode::PoseFree, person, keep, {});
  EXPECT_EQ(none.masked_person, c.masked_person);
}

TEST(Condition, StitchWithAllKeepLeavesPersonUntouched) {
  std::mt19937_64 rng(6);
  const Image person = testing::random_image(rng, 32, 32);
  for (auto m : {ConditioningMode::PoseStitchGray, ConditioningMode::JointsStitch}) {
    const ConditionImages c = build_condition_image(m, person, BinaryMask::all_keep(32, 32), sample_pose(32));
    EXPECT_EQ(c.masked_person, person);
    EXPECT_FALSE(c.side_pose.has_value());
  }
}

TEST(Condition, StitchGrayPutsGrayPoseInEditableRegion) {
  std::mt19937_64 rng(7);
  const Image person = testing::random_image(rng, 32, 32);
  const BinaryMask keep = testing::random_mask(rng, 32, 32);
  const PoseInputs pose = sample_pose(32);
  const ConditionImages c = build_condition_image(ConditioningMode::PoseStitchGray, person, keep, pose);
  EXPECT_EQ(c.masked_person, stitch_pose_into_mask(person, to_grayscale(colorize_pose_map(*pose.pose_map)), keep));
}

TEST(Condition, JointsConcatSideMatchesRasterizer) {
  std::mt19937_64 rng(8);
  const Image person = testing::random_image(rng, 32, 32);
  const BinaryMask keep = testing::random_mask(rng, 32, 32);
  const PoseInputs pose = sample_pose(32);
  const ConditionImages c = build_condition_image(ConditioningMode::JointsConcat, person, keep, pose);
  ASSERT_TRUE(c.side_pose.has_value());
  const Image ref = rasterize_skeleton(*pose.skeleton, 32, 32, true);
  EXPECT_TRUE(((c.side_pose->luma() > 0) == (ref.luma() > 0)).all());
  EXPECT_EQ(c.masked_person, apply_keep(person, keep));
}

TEST(Condition, ConcatGrayIsGray) {
  const ConditionImages c = build_condition_image(ConditioningMode::PoseConcatGray, Image(32, 32),
                                                  BinaryMask::all_edit(32, 32), sample_pose(32));
  ASSERT_TRUE(c.side_pose.has_value());
  EXPECT_EQ(to_grayscale(*c.side_pose), *c.side_pose);
}

TEST(Condition, MissingPoseIsContractError) {
  const Image person(16, 16);
  const BinaryMask keep = BinaryMask::all_edit(16, 16);
  EXPECT_THROW(build_condition_image(ConditioningMode::PoseConcat, person, keep, {}), ContractError);
  EXPECT_THROW(build_condition_image(ConditioningMode::JointsStitch, person, keep, {}), ContractError);
}

TEST(Condition, EditPlaneIsEditIndicator) {
  BinaryMask keep = BinaryMask::all_keep(2, 3);
  keep.set(1, 2, false);
  const Tensor e = edit_plane(keep);
  EXPECT_EQ(e.shape(), (Shape{1, 1, 2, 3}));
  EXPECT_EQ(e.at(0, 0, 1, 2), 1.0f);
  EXPECT_EQ(e.at(0, 0, 0, 0), 0.0f);
}

TEST(Mosaic, OneBandPerChannel) {
  std::mt19937_64 rng(9);
  const Image m = latent_mosaic(bundle_for(ConditioningMode::PoseConcat, 64, rng).stacked());
  EXPECT_EQ(m.width(), 24 * 8);
  EXPECT_EQ(m.height(), 9 * 64 + 8 * 2);
}

}  // namespace
}  // namespace stitchvton
