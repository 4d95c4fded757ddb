#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "stitchvton/image.hpp"
#include "stitchvton/latent_codec.hpp"
#include "stitchvton/pose.hpp"

namespace stitchvton {

/// Pose-free baseline plus the five pose-integration control groups.
enum class ConditioningMode { PoseFree, JointsStitch, JointsConcat, PoseConcat, PoseConcatGray, PoseStitchGray };

enum class MaskStrategy { FineGrained, BoundingBox };

const std::array<ConditioningMode, 6>& all_modes();

/// Flag spelling, e.g. "pose-stitch-gray".
std::string_view mode_name(ConditioningMode mode);
/// Accepts the flag spelling or the enumerator name ("PoseStitchGray").
ConditioningMode parse_mode(std::string_view text);
std::string_view strategy_name(MaskStrategy s);
MaskStrategy parse_strategy(std::string_view text);

bool is_concat_mode(ConditioningMode mode);
bool is_stitch_mode(ConditioningMode mode);
bool uses_skeleton(ConditioningMode mode);
bool uses_pose_map(ConditioningMode mode);
/// 3 for concat modes, 2 otherwise (PoseFree still carries masked | garment).
int width_multiplier(ConditioningMode mode);

struct PoseInputs {
  std::optional<SkeletonPose> skeleton;
  std::optional<PoseMap> pose_map;
};

/// Pose image a mode feeds to the model: color skeleton for the joint modes,
/// colorized (optionally gray) pose map otherwise. nullopt for PoseFree.
/// Throws ContractError if the required pose input is missing.
std::optional<Image> render_pose_condition(ConditioningMode mode, const PoseInputs& pose, int height, int width);

struct ConditionImages {
  Image masked_person;
  std::optional<Image> side_pose;
};

ConditionImages build_condition_image(ConditioningMode mode, const Image& person, const BinaryMask& keep,
                                      const PoseInputs& pose);

/// Edit indicator (1 = inpaint) of a latent-resolution keep mask, 1 x 1 x h x w.
Tensor edit_plane(const BinaryMask& latent_keep);

/// Model input for one sample. Each plane set is already width-extended.
struct LatentBundle {
  Tensor x_noisy;     // 1 x 4 x h x (m*w): [x_t | 0 (| 0)]
  Tensor x_masked;    // 1 x 4 x h x (m*w): [masked | garment (| pose)]
  Tensor mask_plane;  // 1 x 1 x h x (m*w): [edit | 0 (| 0)]
  int width_multiplier = 2;
  ConditioningMode mode = ConditioningMode::PoseFree;

  /// Channel concatenation -> 1 x 9 x h x (m*w).
  Tensor stacked() const;
};

inline constexpr int kModelInputChannels = 9;

LatentBundle assemble_input(ConditioningMode mode, const Tensor& x_t, const Tensor& masked, const Tensor& garment,
                            const std::optional<Tensor>& pose_side, const Tensor& edit);

/// Leftmost width / multiplier columns of an N x C x h x W output.
Tensor crop_output(const Tensor& model_out, int width_multiplier);
inline Tensor crop_output(const Tensor& model_out, ConditioningMode mode) {
  return crop_output(model_out, width_multiplier(mode));
}

/// Gray mosaic of every channel of a 1 x C x h x W tensor, one channel per
/// band, each min-max normalized (constant planes -> 0.5), enlarged by
/// `scale` and separated by mid-gray rules.
Image latent_mosaic(const Tensor& stacked, int scale = 8);

/// Width concatenation of same-height NCHW tensors.
Tensor concat_width(std::span<const Tensor> parts);
/// Channel concatenation of same-size NCHW tensors.
Tensor concat_channels(std::span<const Tensor> parts);
/// Batch concatenation of same-shape (except N) tensors.
Tensor concat_batch(std::span<const Tensor> parts);

}  // namespace stitchvton
