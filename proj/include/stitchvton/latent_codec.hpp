#pragma once

#include <array>

#include <nlohmann/json.hpp>

#include "stitchvton/image.hpp"
#include "stitchvton/tensor.hpp"

namespace stitchvton {

inline constexpr int kLatentChannels = 4;

enum class LatentTag { Masked, Garment, Pose, Noisy, Truth };

/// 1 x 4 x H/8 x W/8 latent plane set.
struct Latent {
  Tensor values;
  LatentTag tag = LatentTag::Truth;

  int height() const { return values.height(); }
  int width() const { return values.width(); }
};

/// Per-channel multipliers applied to (patch mean, DCT(0,1), DCT(1,0), DCT(1,1)).
struct CodecConfig {
  std::array<float, kLatentChannels> scales = kDefaultScales;

  /// Unit-RMS scales measured on 2000 default synthetic samples
  /// (see calibrate_codec_scales); frozen so latents are reproducible.
  static constexpr std::array<float, kLatentChannels> kDefaultScales = {1.0698f, 1.7779f, 2.9154f, 3.8915f};

  nlohmann::json to_json() const;
  static CodecConfig from_json(const nlohmann::json& j);
};

/// Throws ShapeError unless both dims are positive multiples of 8.
void require_latent_compatible(const char* op, int height, int width);

/// Linear analytic stand-in for a VAE encoder: each 8x8 luma patch maps to
/// its mean and three lowest non-DC orthonormal DCT-II coefficients.
Latent encode(const Image& img, const CodecConfig& cfg = {}, LatentTag tag = LatentTag::Truth);

/// Truncated inverse DCT per patch (no clamping), luma only.
Plane decode_luma(const Latent& lat, const CodecConfig& cfg = {});

/// decode_luma clamped to [0,1] and replicated to RGB.
Image decode(const Latent& lat, const CodecConfig& cfg = {});

/// Per-channel [lo, hi] reachable by encoding luma in [0, 1]. Any latent
/// outside this box decodes to clamped pixels.
struct LatentRange {
  std::array<float, kLatentChannels> lo;
  std::array<float, kLatentChannels> hi;
};
LatentRange latent_range(const CodecConfig& cfg = {});

/// Clamps each channel of a 1 x 4 x h x w latent into latent_range(cfg).
Tensor clamp_to_range(const Tensor& latent, const CodecConfig& cfg = {});

/// 1 / RMS of each unscaled coefficient over the given images.
std::array<float, kLatentChannels> calibrate_codec_scales(std::span<const Image> images);

}  // namespace stitchvton
