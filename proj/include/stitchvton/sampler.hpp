#pragma once

#include <cstdint>

#include "stitchvton/conditioning.hpp"
#include "stitchvton/denoiser.hpp"
#include "stitchvton/schedule.hpp"

namespace stitchvton {

struct SamplerConfig {
  int ddim_steps = 25;
  float guidance = 5.0f;
  /// Clamp each step's x0 estimate into the codec's reachable latent box.
  bool clip_x0 = true;
};

struct TryOnRequest {
  Image person;
  Image garment;
  PoseInputs pose;
  BinaryMask keep;
  ConditioningMode mode = ConditioningMode::PoseStitchGray;
  MaskStrategy strategy = MaskStrategy::FineGrained;
  std::uint64_t seed = 0;
};

/// The denoiser plus the constants it was trained with.
struct TryOnModel {
  DenoiserNet net;
  NoiseSchedule schedule;
  CodecConfig codec;
};

/// Final keep mask for a request: the bbox strategy widens it to the
/// bounding box of the editable region.
BinaryMask effective_keep(const BinaryMask& keep, MaskStrategy strategy);

/// Deterministic DDIM from x_T ~ N(0, I) seeded by request.seed, with
/// classifier-free guidance, decoding and compositing: the result equals
/// the person wherever the effective keep mask is 1.
Image sample_tryon(const TryOnModel& model, const TryOnRequest& request, const SamplerConfig& cfg = {});

}  // namespace stitchvton
