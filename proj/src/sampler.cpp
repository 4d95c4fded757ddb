#include "stitchvton/sampler.hpp"

#include <random>

#include "stitchvton/errors.hpp"
#include "stitchvton/mask_ops.hpp"

namespace stitchvton {
namespace {

Tensor batch_item(const Tensor& t, int n) {
  const Shape s = t.shape();
  const std::size_t per = static_cast<std::size_t>(s.c) * s.h * s.w;
  const auto d = t.data();
  return Tensor({1, s.c, s.h, s.w}, std::vector<float>(d.begin() + n * per, d.begin() + (n + 1) * per));
}

}  // namespace

BinaryMask effective_keep(const BinaryMask& keep, MaskStrategy strategy) {
  if (strategy == MaskStrategy::BoundingBox && keep.editable_count() > 0) return derive_bbox_mask(keep);
  return keep;
}

Image sample_tryon(const TryOnModel& model, const TryOnRequest& req, const SamplerConfig& cfg) {
  if (cfg.ddim_steps <= 0) throw ContractError("sample_tryon: ddim_steps must be positive");
  if (!(cfg.guidance >= 1.0f)) throw ContractError("sample_tryon: guidance scale must be >= 1");
  require_same_size("sample_tryon(person, garment)", req.person.height(), req.person.width(), req.garment.height(),
                    req.garment.width());
  require_same_size("sample_tryon(person, mask)", req.person.height(), req.person.width(), req.keep.height(),
                    req.keep.width());
  const BinaryMask keep = effective_keep(req.keep, req.strategy);
  if (keep.editable_count() == 0) return req.person;

  const CodecConfig& codec = model.codec;
  const ConditionImages cond = build_condition_image(req.mode, req.person, keep, req.pose);
  const Tensor masked = encode(cond.masked_person, codec, LatentTag::Masked).values;
  const Tensor garment = encode(req.garment, codec, LatentTag::Garment).values;
  const Tensor edit = edit_plane(downsample_mask(keep));
  std::optional<Tensor> pose_side, zero_pose;
  if (cond.side_pose) {
    pose_side = encode(*cond.side_pose, codec, LatentTag::Pose).values;
    zero_pose = Tensor::zeros(pose_side->shape());
  }
  const Tensor zero_garment = Tensor::zeros(garment.shape());

  std::mt19937_64 rng(req.seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> init(garment.shape().numel());
  for (float& v : init) v = normal(rng);
  Tensor x(garment.shape(), std::move(init));

  const std::vector<int> ladder = model.schedule.ddim_timesteps(cfg.ddim_steps);
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    const int t = ladder[k];
    const Tensor both[2] = {assemble_input(req.mode, x, masked, garment, pose_side, edit).stacked(),
                            assemble_input(req.mode, x, masked, zero_garment, zero_pose, edit).stacked()};
    const int ts[2] = {t, t};
    const Tensor eps = crop_output(model.net.predict(concat_batch(both), ts), req.mode);
    const Tensor guided = cfg_noise(batch_item(eps, 0), batch_item(eps, 1), cfg.guidance);
    if (cfg.clip_x0) {
      const Tensor x0 = clamp_to_range(predict_x0(model.schedule, x, guided, t), codec);
      x = ddim_step(model.schedule, x, eps_from_x0(model.schedule, x, x0, t), t, ladder[k + 1]);
    } else {
      x = ddim_step(model.schedule, x, guided, t, ladder[k + 1]);
    }
  }

  const Image generated = decode(Latent{x, LatentTag::Noisy}, codec);
  Image out = req.person;
  for (int y = 0; y < out.height(); ++y) {
    for (int c = 0; c < out.width(); ++c) {
      if (!keep.keep(y, c)) out.set_pixel(y, c, generated.pixel(y, c));
    }
  }
  return out;
}

}  // namespace stitchvton
