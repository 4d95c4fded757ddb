#include "stitchvton/evaluation.hpp"

#include <cstdio>

#include "stitchvton/errors.hpp"
#include "stitchvton/parallel.hpp"

namespace stitchvton {

nlohmann::json ModeReport::to_json() const {
  return {{"mode", std::string(mode_name(mode))},
          {"ssim_mean", ssim_mean},
          {"fid", fid},
          {"kid_x1000", kid_x1000},
          {"pose_iou_mean", pose_iou_mean},
          {"n", n}};
}

ModeReport evaluate_mode(const TryOnModel& model, ConditioningMode mode, const std::vector<synth::SpriteSample>& samples,
                         const EvalOptions& options, std::vector<Image>* generated_out) {
  const std::size_t n = samples.size();
  if (n < 2) throw ContractError("evaluate_mode: need at least 2 samples");
  std::vector<Image> generated(n), truths(n);
  std::vector<double> ssims(n), ious(n);
  parallel_for(n, [&](std::size_t i) {
    const synth::SpriteSample& s = samples[i];
    TryOnRequest req{s.person, s.garment, PoseInputs{s.skeleton, s.pose_map}, s.fine, mode, options.strategy,
                     options.seed + i};
    Image truth = s.truth;
    if (options.pose_transfer) {
      if (!s.target) throw ContractError("evaluate_mode: sample has no pose-transfer target");
      req.pose = PoseInputs{s.target->skeleton, s.target->pose_map};
      req.keep = BinaryMask(s.fine.values().min(s.target->fine.values()));
      truth = s.target->truth;
    }
    generated[i] = sample_tryon(model, req, options.sampler);
    ssims[i] = metrics::ssim(generated[i], truth);
    ious[i] = metrics::pose_iou(generated[i], metrics::silhouette(truth), effective_keep(req.keep, req.strategy));
    truths[i] = std::move(truth);
  });

  const auto extract = metrics::codec_features(model.codec);
  const metrics::FeatureMatrix real = metrics::feature_matrix(truths, extract);
  const metrics::FeatureMatrix fake = metrics::feature_matrix(generated, extract);
  ModeReport r;
  r.mode = mode;
  r.n = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.ssim_mean += ssims[i] / n;
    r.pose_iou_mean += ious[i] / n;
  }
  r.fid = metrics::fid(real, fake);
  r.kid_x1000 = 1000.0 * metrics::kid(real, fake, options.seed);
  if (generated_out) *generated_out = std::move(generated);
  return r;
}

std::string report_csv(const std::vector<ModeReport>& reports) {
  std::string out = "mode,ssim_mean,fid,kid_x1000,pose_iou_mean,n\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%d\n", std::string(mode_name(r.mode)).c_str(),
                  r.ssim_mean, r.fid, r.kid_x1000, r.pose_iou_mean, r.n);
    out += line;
  }
  return out;
}

}  // namespace stitchvton
