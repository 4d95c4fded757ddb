#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stitchvton/metrics.hpp"
#include "stitchvton/sampler.hpp"
#include "stitchvton/synth.hpp"

namespace stitchvton {

struct EvalOptions {
  MaskStrategy strategy = MaskStrategy::BoundingBox;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  /// Condition on the sample's transfer target pose and score against its truth.
  bool pose_transfer = false;
};

struct ModeReport {
  ConditioningMode mode = ConditioningMode::PoseFree;
  double ssim_mean = 0.0;
  double fid = 0.0;
  double kid_x1000 = 0.0;
  double pose_iou_mean = 0.0;
  int n = 0;

  nlohmann::json to_json() const;
};

/// One generated try-on per sample (seed + index), scored against its truth.
ModeReport evaluate_mode(const TryOnModel& model, ConditioningMode mode, const std::vector<synth::SpriteSample>& samples,
                         const EvalOptions& options, std::vector<Image>* generated = nullptr);

std::string report_csv(const std::vector<ModeReport>& reports);

}  // namespace stitchvton
