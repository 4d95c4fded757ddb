#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "stitchvton/image.hpp"
#include "stitchvton/pose.hpp"

namespace stitchvton {

// 8-bit PNG. Channel values are quantized with round(v * 255).
std::vector<std::uint8_t> encode_png(const Image& img);
void save_png(const std::filesystem::path& path, const Image& img);
Image load_png(const std::filesystem::path& path);

/// Single-channel PNG with values {0, 255}; loading thresholds at 128.
void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask load_mask_png(const std::filesystem::path& path);

/// Single-channel PNG holding raw labels 0..kNumPoseParts.
void save_pose_map_png(const std::filesystem::path& path, const PoseMap& pm);
PoseMap load_pose_map_png(const std::filesystem::path& path);

/// {"joints":[{"name":..,"x":..,"y":..,"v":0|1}],"edges":[[i,j],...]}
nlohmann::json skeleton_to_json(const SkeletonPose& pose);
SkeletonPose skeleton_from_json(const nlohmann::json& j);
void save_skeleton(const std::filesystem::path& path, const SkeletonPose& pose);
SkeletonPose load_skeleton(const std::filesystem::path& path);

/// Quantizes like a PNG round trip would.
Image quantize8(const Image& img);

}  // namespace stitchvton
