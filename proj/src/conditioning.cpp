#include "stitchvton/conditioning.hpp"

#include <algorithm>

#include "stitchvton/autograd.hpp"
#include "stitchvton/mask_ops.hpp"

namespace stitchvton {
namespace {

struct ModeInfo {
  ConditioningMode mode;
  std::string_view flag;
  std::string_view enum_name;
};

constexpr std::array<ModeInfo, 6> kModes = {{
    {ConditioningMode::PoseFree, "pose-free", "PoseFree"},
    {ConditioningMode::JointsStitch, "joints-stitch", "JointsStitch"},
    {ConditioningMode::JointsConcat, "joints-concat", "JointsConcat"},
    {ConditioningMode::PoseConcat, "pose-concat", "PoseConcat"},
    {ConditioningMode::PoseConcatGray, "pose-concat-gray", "PoseConcatGray"},
    {ConditioningMode::PoseStitchGray, "pose-stitch-gray", "PoseStitchGray"},
}};

}  // namespace

const std::array<ConditioningMode, 6>& all_modes() {
  static const std::array<ConditioningMode, 6> modes = {
      ConditioningMode::PoseFree,   ConditioningMode::JointsStitch,   ConditioningMode::JointsConcat,
      ConditioningMode::PoseConcat, ConditioningMode::PoseConcatGray, ConditioningMode::PoseStitchGray};
  return modes;
}

std::string_view mode_name(ConditioningMode mode) {
  for (const auto& info : kModes) {
    if (info.mode == mode) return info.flag;
  }
  throw ContractError("unknown conditioning mode");
}

ConditioningMode parse_mode(std::string_view text) {
  for (const auto& info : kModes) {
    if (text == info.flag || text == info.enum_name) return info.mode;
  }
  throw ContractError("unknown conditioning mode '" + std::string(text) + "'");
}

std::string_view strategy_name(MaskStrategy s) {
  return s == MaskStrategy::FineGrained ? "fine" : "bbox";
}

MaskStrategy parse_strategy(std::string_view text) {
  if (text == "fine" || text == "FineGrained" || text == "fine-grained") return MaskStrategy::FineGrained;
  if (text == "bbox" || text == "BoundingBox" || text == "bounding-box") return MaskStrategy::BoundingBox;
  throw ContractError("unknown mask strategy '" + std::string(text) + "'");
}

bool is_concat_mode(ConditioningMode mode) {
  return mode == ConditioningMode::JointsConcat || mode == ConditioningMode::PoseConcat ||
         mode == ConditioningMode::PoseConcatGray;
}

bool is_stitch_mode(ConditioningMode mode) {
  return mode == ConditioningMode::JointsStitch || mode == ConditioningMode::PoseStitchGray;
}

bool uses_skeleton(ConditioningMode mode) {
  return mode == ConditioningMode::JointsStitch || mode == ConditioningMode::JointsConcat;
}

bool uses_pose_map(ConditioningMode mode) {
  return mode == ConditioningMode::PoseConcat || mode == ConditioningMode::PoseConcatGray ||
         mode == ConditioningMode::PoseStitchGray;
}

int width_multiplier(ConditioningMode mode) { return is_concat_mode(mode) ? 3 : 2; }

std::optional<Image> render_pose_condition(ConditioningMode mode, const PoseInputs& pose, int height, int width) {
  if (uses_skeleton(mode)) {
    if (!pose.skeleton) throw ContractError(std::string(mode_name(mode)) + " requires a pose skeleton");
    return rasterize_skeleton(*pose.skeleton, height, width, true);
  }
  if (uses_pose_map(mode)) {
    if (!pose.pose_map) throw ContractError(std::string(mode_name(mode)) + " requires a pose map");
    require_same_size("pose map", height, width, pose.pose_map->height(), pose.pose_map->width());
    Image colored = colorize_pose_map(*pose.pose_map);
    if (mode == ConditioningMode::PoseConcatGray || mode == ConditioningMode::PoseStitchGray) {
      return to_grayscale(colored);
    }
    return colored;
  }
  return std::nullopt;
}

ConditionImages build_condition_image(ConditioningMode mode, const Image& person, const BinaryMask& keep,
                                      const PoseInputs& pose) {
  require_same_size("build_condition_image", person.height(), person.width(), keep.height(), keep.width());
  auto rendered = render_pose_condition(mode, pose, person.height(), person.width());
  if (is_stitch_mode(mode)) return {stitch_pose_into_mask(person, *rendered, keep), std::nullopt};
  return {apply_keep(person, keep), std::move(rendered)};
}

Tensor edit_plane(const BinaryMask& latent_keep) {
  const Plane edit = latent_keep.edit_indicator();
  return Tensor::from_array({1, 1, latent_keep.height(), latent_keep.width()},
                            Eigen::Map<const Eigen::ArrayXf>(edit.data(), edit.size()));
}

Tensor LatentBundle::stacked() const {
  const std::array<Tensor, 3> parts = {x_noisy, x_masked, mask_plane};
  return concat_channels(parts);
}

LatentBundle assemble_input(ConditioningMode mode, const Tensor& x_t, const Tensor& masked, const Tensor& garment,
                            const std::optional<Tensor>& pose_side, const Tensor& edit) {
  if (pose_side.has_value() != is_concat_mode(mode)) {
    throw ContractError(std::string("assemble_input: ") + mode_name(mode).data() +
                        (is_concat_mode(mode) ? " needs a pose side latent" : " takes no pose side latent"));
  }
  const Shape ref = x_t.shape();
  if (ref.c != kLatentChannels) throw ShapeError("assemble_input: x_t must have 4 channels, got " + ref.str());
  for (const Tensor* t : {&masked, &garment}) {
    if (t->shape() != ref) throw_shape_error("assemble_input", ref, t->shape());
  }
  if (pose_side && pose_side->shape() != ref) throw_shape_error("assemble_input (pose)", ref, pose_side->shape());
  if (edit.shape() != Shape{ref.n, 1, ref.h, ref.w}) throw_shape_error("assemble_input (mask plane)", ref, edit.shape());

  const int m = width_multiplier(mode);
  const Tensor pad4 = Tensor::zeros(ref);
  const Tensor pad1 = Tensor::zeros(edit.shape());

  std::vector<Tensor> noisy{x_t}, cond{masked, garment}, mask{edit};
  if (pose_side) cond.push_back(*pose_side);
  for (int k = 1; k < m; ++k) {
    noisy.push_back(pad4);
    mask.push_back(pad1);
  }
  return {concat_width(noisy), concat_width(cond), concat_width(mask), m, mode};
}

Tensor crop_output(const Tensor& model_out, int multiplier) {
  const Shape s = model_out.shape();
  if (multiplier < 1 || s.w % multiplier != 0) {
    throw ShapeError("crop_output: width " + std::to_string(s.w) + " not divisible by " + std::to_string(multiplier));
  }
  return nn::slice_width(nn::constant(model_out), 0, s.w / multiplier).value();
}

Tensor concat_width(std::span<const Tensor> parts) {
  std::vector<nn::Var> vars;
  for (const auto& p : parts) vars.push_back(nn::constant(p));
  return nn::concat_width<float>(vars).value();
}

Tensor concat_channels(std::span<const Tensor> parts) {
  std::vector<nn::Var> vars;
  for (const auto& p : parts) vars.push_back(nn::constant(p));
  return nn::concat_channels<float>(vars).value();
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_batch: no inputs");
  const Shape first = parts[0].shape();
  int n = 0;
  std::vector<float> data;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.c != first.c || s.h != first.h || s.w != first.w) throw_shape_error("concat_batch", first, s);
    n += s.n;
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor({n, first.c, first.h, first.w}, std::move(data));
}

Image latent_mosaic(const Tensor& stacked, int scale) {
  const Shape s = stacked.shape();
  if (s.n != 1 || scale <= 0) throw ShapeError("latent_mosaic: expected N = 1 and scale > 0, got " + s.str());
  constexpr int kRule = 2;
  const int band = s.h * scale;
  const int height = s.c * band + (s.c - 1) * kRule;
  const int width = s.w * scale;
  Plane out = Plane::Constant(height, width, 0.5f);
  for (int c = 0; c < s.c; ++c) {
    float lo = stacked.at(0, c, 0, 0), hi = lo;
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        lo = std::min(lo, stacked.at(0, c, y, x));
        hi = std::max(hi, stacked.at(0, c, y, x));
      }
    }
    const int top = c * (band + kRule);
    for (int y = 0; y < band; ++y) {
      for (int x = 0; x < width; ++x) {
        const float v = stacked.at(0, c, y / scale, x / scale);
        out(top + y, x) = hi > lo ? (v - lo) / (hi - lo) : 0.5f;
      }
    }
  }
  return Image(out, out, out);
}

}  // namespace stitchvton
