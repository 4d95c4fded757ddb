#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "stitchvton/image.hpp"

namespace stitchvton {

inline constexpr int kNumJoints = 18;
inline constexpr int kNumSkeletonEdges = 17;
/// Body-part labels of the synthetic pose maps (0 is background).
inline constexpr int kNumPoseParts = 8;

enum class PosePart : std::uint8_t {
  Background = 0,
  Head = 1,
  Torso = 2,
  RightUpperArm = 3,
  RightLowerArm = 4,
  LeftUpperArm = 5,
  LeftLowerArm = 6,
  RightLeg = 7,
  LeftLeg = 8,
};

/// 18-keypoint body model (nose, neck, shoulders, elbows, wrists, hips,
/// knees, ankles, eyes, ears).
enum class JointId : int {
  Nose = 0, Neck, RShoulder, RElbow, RWrist, LShoulder, LElbow, LWrist,
  RHip, RKnee, RAnkle, LHip, LKnee, LAnkle, REye, LEye, REar, LEar,
};

struct Joint {
  std::string name;
  float x = 0.0f;
  float y = 0.0f;
  bool visible = false;
};

struct SkeletonPose {
  std::vector<Joint> joints;
  std::vector<std::pair<int, int>> edges;

  /// All 18 joints invisible at the origin, standard 17-edge connectivity.
  static SkeletonPose empty();
  Joint& operator[](JointId id) { return joints.at(static_cast<int>(id)); }
  const Joint& operator[](JointId id) const { return joints.at(static_cast<int>(id)); }

  /// Throws ContractError on bad edge indices or visible joints outside h x w.
  void validate(int height, int width) const;
  bool operator==(const SkeletonPose&) const;
};

const std::array<const char*, kNumJoints>& joint_names();
const std::array<std::pair<int, int>, kNumSkeletonEdges>& skeleton_edges();
const std::array<Rgb, kNumSkeletonEdges>& skeleton_palette();

/// Per-pixel body-part labels in [0, kNumPoseParts].
struct PoseMap {
  LabelPlane labels;

  int height() const { return static_cast<int>(labels.rows()); }
  int width() const { return static_cast<int>(labels.cols()); }
  /// Throws ContractError if a label exceeds kNumPoseParts.
  void validate() const;
};

const std::array<Rgb, kNumPoseParts + 1>& pose_palette();

inline constexpr int kSkeletonStrokeWidth = 3;
inline constexpr int kJointRadius = 4;

/// Black canvas; edges as 3-px thick Bresenham strokes, visible joints as
/// radius-4 discs on top. Color mode uses skeleton_palette(); gray mode is white.
Image rasterize_skeleton(const SkeletonPose& pose, int height, int width, bool color);

/// Label 0 -> black, label k -> pose_palette()[k].
Image colorize_pose_map(const PoseMap& pm);

}  // namespace stitchvton
