#include "stitchvton/pose.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace stitchvton {
namespace {

Rgb rgb255(int r, int g, int b) {
  return {static_cast<float>(r) / 255.0f, static_cast<float>(g) / 255.0f, static_cast<float>(b) / 255.0f};
}

void stamp(Image& img, int y, int x, const Rgb& c) {
  if (y >= 0 && y < img.height() && x >= 0 && x < img.width()) img.set_pixel(y, x, c);
}

void draw_thick_line(Image& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  const bool x_major = dx >= -dy;
  const int half = kSkeletonStrokeWidth / 2;
  int err = dx + dy;
  for (;;) {
    for (int o = -half; o <= half; ++o) {
      if (x_major) {
        stamp(img, y0 + o, x0, c);
      } else {
        stamp(img, y0, x0 + o, c);
      }
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_disc(Image& img, int cx, int cy, int radius, const Rgb& c) {
  for (int y = cy - radius; y <= cy + radius; ++y) {
    for (int x = cx - radius; x <= cx + radius; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) stamp(img, y, x, c);
    }
  }
}

int pixel_of(float v) { return static_cast<int>(std::lround(v)); }

}  // namespace

const std::array<const char*, kNumJoints>& joint_names() {
  static const std::array<const char*, kNumJoints> names = {
      "nose",      "neck",   "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
      "l_elbow",   "l_wrist", "r_hip",     "r_knee",  "r_ankle", "l_hip",
      "l_knee",    "l_ankle", "r_eye",     "l_eye",   "r_ear",   "l_ear"};
  return names;
}

const std::array<std::pair<int, int>, kNumSkeletonEdges>& skeleton_edges() {
  static const std::array<std::pair<int, int>, kNumSkeletonEdges> edges = {{
      {1, 2}, {1, 5}, {2, 3}, {3, 4}, {5, 6}, {6, 7}, {1, 8}, {8, 9}, {9, 10},
      {1, 11}, {11, 12}, {12, 13}, {1, 0}, {0, 14}, {14, 16}, {0, 15}, {15, 17},
  }};
  return edges;
}

const std::array<Rgb, kNumSkeletonEdges>& skeleton_palette() {
  static const std::array<Rgb, kNumSkeletonEdges> palette = {
      rgb255(255, 0, 0),   rgb255(255, 85, 0),  rgb255(255, 170, 0), rgb255(255, 255, 0),
      rgb255(170, 255, 0), rgb255(85, 255, 0),  rgb255(0, 255, 0),   rgb255(0, 255, 85),
      rgb255(0, 255, 170), rgb255(0, 255, 255), rgb255(0, 170, 255), rgb255(0, 85, 255),
      rgb255(0, 0, 255),   rgb255(85, 0, 255),  rgb255(170, 0, 255), rgb255(255, 0, 255),
      rgb255(255, 0, 170)};
  return palette;
}

const std::array<Rgb, kNumPoseParts + 1>& pose_palette() {
  // Luma of consecutive parts differs by >= 0.05 so gray renders stay separable.
  static const std::array<Rgb, kNumPoseParts + 1> palette = {{
      {0.0f, 0.0f, 0.0f},
      {1.0f, 0.85f, 0.0f},
      {0.0f, 0.4f, 1.0f},
      {1.0f, 0.0f, 0.0f},
      {1.0f, 0.5f, 0.5f},
      {0.0f, 0.8f, 0.0f},
      {0.6f, 1.0f, 0.9f},
      {0.4f, 0.0f, 0.6f},
      {0.0f, 1.0f, 1.0f},
  }};
  return palette;
}

SkeletonPose SkeletonPose::empty() {
  SkeletonPose pose;
  for (const char* name : joint_names()) pose.joints.push_back({name, 0.0f, 0.0f, false});
  pose.edges.assign(skeleton_edges().begin(), skeleton_edges().end());
  return pose;
}

void SkeletonPose::validate(int height, int width) const {
  const int n = static_cast<int>(joints.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      std::ostringstream os;
      os << "skeleton: edge (" << a << "," << b << ") references a joint outside [0," << n << ")";
      throw ContractError(os.str());
    }
  }
  for (const auto& j : joints) {
    if (j.visible && (j.x < 0 || j.y < 0 || j.x > width - 1 || j.y > height - 1)) {
      throw ContractError("skeleton: visible joint '" + j.name + "' lies outside the image");
    }
  }
}

bool SkeletonPose::operator==(const SkeletonPose& o) const {
  if (joints.size() != o.joints.size() || edges != o.edges) return false;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const auto& a = joints[i];
    const auto& b = o.joints[i];
    if (a.name != b.name || a.x != b.x || a.y != b.y || a.visible != b.visible) return false;
  }
  return true;
}

void PoseMap::validate() const {
  if (labels.size() > 0 && labels.maxCoeff() > kNumPoseParts) {
    throw ContractError("pose map: label exceeds " + std::to_string(kNumPoseParts));
  }
}

Image rasterize_skeleton(const SkeletonPose& pose, int height, int width, bool color) {
  pose.validate(height, width);
  Image img(height, width);
  const Rgb white{1.0f, 1.0f, 1.0f};
  const auto& palette = skeleton_palette();
  for (std::size_t e = 0; e < pose.edges.size(); ++e) {
    const auto& a = pose.joints[pose.edges[e].first];
    const auto& b = pose.joints[pose.edges[e].second];
    if (!a.visible || !b.visible) continue;
    draw_thick_line(img, pixel_of(a.x), pixel_of(a.y), pixel_of(b.x), pixel_of(b.y),
                    color ? palette[e % palette.size()] : white);
  }
  for (std::size_t j = 0; j < pose.joints.size(); ++j) {
    const auto& joint = pose.joints[j];
    if (!joint.visible) continue;
    draw_disc(img, pixel_of(joint.x), pixel_of(joint.y), kJointRadius,
              color ? palette[j % palette.size()] : white);
  }
  return img;
}

Image colorize_pose_map(const PoseMap& pm) {
  pm.validate();
  const auto& palette = pose_palette();
  Plane r(pm.height(), pm.width()), g(pm.height(), pm.width()), b(pm.height(), pm.width());
  for (int y = 0; y < pm.height(); ++y) {
    for (int x = 0; x < pm.width(); ++x) {
      const Rgb& c = palette[pm.labels(y, x)];
      r(y, x) = c[0];
      g(y, x) = c[1];
      b(y, x) = c[2];
    }
  }
  return Image(std::move(r), std::move(g), std::move(b));
}

}  // namespace stitchvton
