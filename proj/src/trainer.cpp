#include "stitchvton/trainer.hpp"

#include <numeric>

#include "stitchvton/errors.hpp"
#include "stitchvton/mask_ops.hpp"
#include "stitchvton/parallel.hpp"

namespace stitchvton {
namespace {

ConditionedLatents condition(ConditioningMode mode, const Image& person, const Image& truth, const BinaryMask& keep,
                             const PoseInputs& pose, const CodecConfig& codec) {
  const ConditionImages cond = build_condition_image(mode, person, keep, pose);
  ConditionedLatents out{encode(truth, codec).values, encode(cond.masked_person, codec, LatentTag::Masked).values,
                         edit_plane(downsample_mask(keep)), std::nullopt};
  if (cond.side_pose) out.pose_side = encode(*cond.side_pose, codec, LatentTag::Pose).values;
  return out;
}

}  // namespace

TrainingExample prepare_example(const synth::SpriteSample& s, ConditioningMode mode, const CodecConfig& codec) {
  const PoseInputs pose{s.skeleton, s.pose_map};
  TrainingExample ex{encode(s.garment, codec, LatentTag::Garment).values,
                     {condition(mode, s.person, s.truth, s.fine, pose, codec),
                      condition(mode, s.person, s.truth, s.bbox, pose, codec)},
                     std::nullopt};
  if (s.target) {
    // The box must free both the source and the target figure's garment area.
    LabelPlane keep = s.fine.values().min(s.target->fine.values());
    const BinaryMask box = derive_bbox_mask(BinaryMask(keep));
    const PoseInputs target_pose{s.target->skeleton, s.target->pose_map};
    ex.transfer = condition(mode, s.person, s.target->truth, box, target_pose, codec);
  }
  return ex;
}

MaskStrategy draw_mask_strategy(std::mt19937_64& rng, double fine_fraction) {
  if (!(fine_fraction >= 0.0 && fine_fraction <= 1.0)) throw ContractError("mask mix outside [0,1]");
  return std::bernoulli_distribution(fine_fraction)(rng) ? MaskStrategy::FineGrained : MaskStrategy::BoundingBox;
}

Trainer::Trainer(DenoiserNet net, NoiseSchedule schedule, ConditioningMode mode, std::vector<TrainingExample> data,
                 TrainOptions options)
    : net_(std::move(net)),
      schedule_(std::move(schedule)),
      mode_(mode),
      data_(std::move(data)),
      options_(options),
      rng_(options.seed) {
  if (data_.empty()) throw ContractError("Trainer: empty training set");
  if (options_.batch <= 0) throw ContractError("Trainer: batch must be positive");
  if (!(options_.cond_dropout >= 0.0 && options_.cond_dropout < 1.0)) {
    throw ContractError("Trainer: condition dropout outside [0,1)");
  }
  if (options_.pose_transfer && !data_.front().transfer) {
    throw ContractError("Trainer: pose-transfer training needs samples with targets");
  }
  adam_.lr = options_.lr;
  order_.resize(data_.size());
}

int Trainer::next_index() {
  if (cursor_ == 0) {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }
  const int idx = order_[cursor_];
  cursor_ = (cursor_ + 1) % order_.size();
  return idx;
}

LatentBundle Trainer::bundle_for(const Draw& d) const {
  const TrainingExample& ex = data_[d.index];
  const bool transfer = options_.pose_transfer && d.strategy == MaskStrategy::BoundingBox;
  const ConditionedLatents& c = transfer ? *ex.transfer : ex.by_strategy[static_cast<int>(d.strategy)];
  const Tensor x_t = forward_diffuse(schedule_, c.x0, d.t, d.eps);
  if (d.dropped) {
    // Only the side columns are blanked; a stitched pose stays in place.
    std::optional<Tensor> pose;
    if (c.pose_side) pose = Tensor::zeros(c.pose_side->shape());
    return assemble_input(mode_, x_t, c.masked, Tensor::zeros(ex.garment.shape()), pose, c.edit);
  }
  return assemble_input(mode_, x_t, c.masked, ex.garment, c.pose_side, c.edit);
}

StepReport Trainer::step() {
  const int batch = options_.batch;
  StepReport report;
  // All randomness is drawn serially so sharding never changes the result.
  std::vector<Draw> draws;
  draws.reserve(batch);
  std::uniform_int_distribution<int> pick_t(1, schedule_.steps());
  std::bernoulli_distribution drop(options_.cond_dropout);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (int b = 0; b < batch; ++b) {
    Draw d{next_index(), draw_mask_strategy(rng_, options_.mask_mix), false, 0, {}};
    d.dropped = drop(rng_);
    d.t = pick_t(rng_);
    const Shape s = data_[d.index].garment.shape();
    std::vector<float> eps(s.numel());
    for (float& e : eps) e = normal(rng_);
    d.eps = Tensor(s, std::move(eps));
    report.fine_count += d.strategy == MaskStrategy::FineGrained;
    report.dropped_count += d.dropped;
    draws.push_back(std::move(d));
  }

  std::vector<nn::GradientMap> grads(batch);
  std::vector<double> losses(batch);
  parallel_for(batch, [&](std::size_t b) {
    const Draw& d = draws[b];
    nn::ParamBinder bind(net_.params(), true);
    const nn::Var input = nn::constant(bundle_for(d).stacked());
    const int ts[1] = {d.t};
    const nn::Var out = net_.forward(bind, input, ts);
    const nn::Var pred = nn::slice_width(out, 0, d.eps.width());
    const nn::Var loss = nn::mse(pred, nn::constant(d.eps));
    losses[b] = loss.value().data()[0];
    grads[b] = bind.gradients(nn::backprop(loss));
  });

  nn::adam_step(net_.mutable_params(), nn::reduce_gradients(grads, 1.0f / batch), adam_);
  report.step = adam_.step;
  for (double l : losses) report.loss += l;
  report.loss /= batch;
  return report;
}

std::vector<double> Trainer::run(int steps, const std::function<void(const StepReport&)>& on_step) {
  std::vector<double> losses;
  losses.reserve(steps);
  for (int i = 0; i < steps; ++i) {
    const StepReport r = step();
    losses.push_back(r.loss);
    if (on_step) on_step(r);
  }
  return losses;
}

}  // namespace stitchvton
