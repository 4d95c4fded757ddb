#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mask_oracles.hpp"
#include "stitchvton/errors.hpp"
#include "stitchvton/latent_codec.hpp"

namespace stitchvton {
namespace {

Image gray_image(const Plane& p) { return Image(p, p, p); }

// Smooth low-frequency image in [0.1, 0.9].
Image smooth_image(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  const float a = u(rng), b = u(rng), c = u(rng), ph = u(rng);
  Plane p(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = 0.5f + 0.2f * a * std::sin(0.05f * x + ph) + 0.15f * b * std::cos(0.04f * y) +
                      0.05f * c * (x + y) / static_cast<float>(h + w);
      p(y, x) = v;
    }
  }
  return gray_image(p);
}

TEST(Codec, LatentShape) {
  const Latent l = encode(Image(32, 48));
  EXPECT_EQ(l.values.shape(), (Shape{1, 4, 4, 6}));
}

TEST(Codec, RejectsIndivisibleDims) {
  EXPECT_THROW(encode(Image(60, 64)), ShapeError);
  EXPECT_THROW(encode(Image(64, 20)), ShapeError);
}

TEST(Codec, ZeroImageGivesZeroLatent) {
  const Latent l = encode(Image(16, 16));
  for (float v : l.values.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Codec, ConstantImageHasOnlyMeanChannel) {
  const CodecConfig cfg;
  const Latent l = encode(Image::filled(16, 24, {0.3f, 0.3f, 0.3f}), cfg);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(l.values.at(0, 0, i, j), 0.3f * cfg.scales[0], 1e-6);
      for (int c = 1; c < 4; ++c) EXPECT_NEAR(l.values.at(0, c, i, j), 0.0f, 1e-6);
    }
  }
}

TEST(Codec, ConstantRoundTrip) {
  for (float v : {0.0f, 0.25f, 0.5f, 1.0f}) {
    const Image img = Image::filled(16, 16, {v, v, v});
    const Image back = decode(encode(img));
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) EXPECT_NEAR(back.pixel(y, x)[0], v, 1e-6);
    }
  }
}

TEST(Codec, ColorCollapsesToLuma) {
  const Latent a = encode(Image::filled(8, 8, {1.0f, 0.0f, 0.0f}));
  const Latent b = encode(Image::filled(8, 8, {0.299f, 0.299f, 0.299f}));
  EXPECT_NEAR(a.values.at(0, 0, 0, 0), b.values.at(0, 0, 0, 0), 1e-6);
}

TEST(Codec, EncodeIsLinear) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(0.0f, 0.5f);
  for (int trial = 0; trial < 10; ++trial) {
    const Plane pa = Plane::NullaryExpr(16, 16, [&] { return u(rng); });
    const Plane pb = Plane::NullaryExpr(16, 16, [&] { return u(rng); });
    const Latent ea = encode(gray_image(pa));
    const Latent eb = encode(gray_image(pb));
    const Latent es = encode(gray_image(pa + pb));
    EXPECT_LT((es.values.array() - ea.values.array() - eb.values.array()).abs().maxCoeff(), 1e-5);
  }
}

TEST(Codec, ZeroLatentDecodesBlack) {
  EXPECT_EQ(decode(Latent{Tensor::zeros({1, 4, 2, 2})}), Image(16, 16));
}

TEST(Codec, SmoothGradientRoundTrip) {
  // Bilinear gradients lose only the second-order terms a 2x2 DCT cannot hold.
  for (float gx : {0.0f, 0.3f, 0.8f}) {
    for (float gy : {0.0f, 0.4f, -0.5f}) {
      Plane p(64, 64);
      for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) p(y, x) = 0.5f + gx * (x - 31.5f) / 64.0f * 0.9f + gy * (y - 31.5f) / 64.0f * 0.9f;
      }
      const Image img = gray_image(p.cwiseMax(0.0f).cwiseMin(1.0f));
      const Image back = decode(encode(img));
      EXPECT_LT((back.channel(0) - img.channel(0)).abs().maxCoeff(), 0.05f);
    }
  }
}

TEST(Codec, RoundTripIsIdempotent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Latent once = encode(smooth_image(rng, 32, 32));
    const Plane d = decode_luma(once);
    ASSERT_TRUE((d >= 0.0f).all() && (d <= 1.0f).all());
    const Latent twice = encode(gray_image(d));
    EXPECT_LT((twice.values.array() - once.values.array()).abs().maxCoeff(), 1e-5);
  }
}

TEST(Codec, DecodeClampsButDecodeLumaDoesNot) {
  const Latent big{Tensor::filled({1, 4, 1, 1}, 0.0f)};
  std::vector<float> v = {10.0f, 0.0f, 0.0f, 0.0f};
  const Latent l{Tensor({1, 4, 1, 1}, v)};
  EXPECT_GT(decode_luma(l).maxCoeff(), 1.0f);
  EXPECT_EQ(decode(l).channel(0).maxCoeff(), 1.0f);
  EXPECT_EQ(decode(big), Image(8, 8));
}

TEST(Codec, LatentRangeIsAttainedByExtremalPatches) {
  // Left half white maximizes the horizontal coefficient; the two diagonal
  // quadrants maximize the mixed one. S = sum of the positive cosines.
  double s = 0.0;
  for (int x = 0; x < 4; ++x) s += std::cos(std::numbers::pi * (2 * x + 1) / 16.0);
  const CodecConfig cfg;
  const LatentRange r = latent_range(cfg);
  EXPECT_NEAR(r.hi[0], cfg.scales[0], 1e-5);
  EXPECT_NEAR(r.lo[0], 0.0f, 1e-6);
  EXPECT_NEAR(r.hi[1], cfg.scales[1] * std::sqrt(8.0) / 2.0 * s, 1e-4);
  EXPECT_NEAR(r.hi[2], r.hi[1] * cfg.scales[2] / cfg.scales[1], 1e-4);
  EXPECT_NEAR(r.hi[3], cfg.scales[3] * s * s / 2.0, 1e-4);
  for (int c = 1; c < 4; ++c) EXPECT_NEAR(r.lo[c], -r.hi[c], 1e-5);

  Plane left = Plane::Zero(8, 8), quad = Plane::Zero(8, 8);
  left.leftCols(4).setOnes();
  quad.topLeftCorner(4, 4).setOnes();
  quad.bottomRightCorner(4, 4).setOnes();
  EXPECT_NEAR(encode(gray_image(left), cfg).values.at(0, 1, 0, 0), r.hi[1], 1e-5);
  EXPECT_NEAR(encode(gray_image(quad), cfg).values.at(0, 3, 0, 0), r.hi[3], 1e-5);
}

TEST(Codec, RandomImagesEncodeInsideRange) {
  std::mt19937_64 rng(21);
  const LatentRange r = latent_range();
  for (int trial = 0; trial < 20; ++trial) {
    const Latent lat = encode(testing::random_image(rng, 32, 32));
    for (int c = 0; c < 4; ++c) {
      for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
          EXPECT_GE(lat.values.at(0, c, y, x), r.lo[c] - 1e-5f);
          EXPECT_LE(lat.values.at(0, c, y, x), r.hi[c] + 1e-5f);
        }
      }
    }
  }
}

TEST(Codec, ClampToRange) {
  const LatentRange r = latent_range();
  const Tensor big = Tensor::filled({1, 4, 2, 2}, 100.0f), small = Tensor::filled({1, 4, 2, 2}, -100.0f);
  const Tensor inside = Tensor::filled({1, 4, 2, 2}, 0.25f);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(clamp_to_range(big).at(0, c, 1, 1), r.hi[c]);
    EXPECT_EQ(clamp_to_range(small).at(0, c, 0, 1), r.lo[c]);
  }
  EXPECT_EQ(clamp_to_range(inside).to_vector(), inside.to_vector());
  EXPECT_THROW(clamp_to_range(Tensor::zeros({1, 3, 2, 2})), ShapeError);
}

TEST(Codec, CalibrationGivesUnitRms) {
  std::mt19937_64 rng(9);
  std::vector<Image> imgs;
  for (int i = 0; i < 20; ++i) imgs.push_back(testing::random_image(rng, 16, 16));
  CodecConfig cfg;
  cfg.scales = calibrate_codec_scales(imgs);
  double sq[4] = {0, 0, 0, 0};
  long n = 0;
  for (const auto& img : imgs) {
    const Tensor t = encode(img, cfg).values;
    for (int c = 0; c < 4; ++c) {
      for (int y = 0; y < t.height(); ++y) {
        for (int x = 0; x < t.width(); ++x) sq[c] += t.at(0, c, y, x) * t.at(0, c, y, x);
      }
    }
    n += t.height() * t.width();
  }
  for (double s : sq) EXPECT_NEAR(std::sqrt(s / n), 1.0, 1e-4);
}

TEST(Codec, ConfigJsonRoundTripAndStrictKeys) {
  CodecConfig c;
  c.scales = {1.0f, 2.0f, 3.0f, 4.0f};
  EXPECT_EQ(CodecConfig::from_json(c.to_json()).scales, c.scales);
  nlohmann::json j = c.to_json();
  j["extra"] = 1;
  EXPECT_THROW(CodecConfig::from_json(j), ContractError);
}

}  // namespace
}  // namespace stitchvton
