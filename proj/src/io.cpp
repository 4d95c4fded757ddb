#include "stitchvton/io.hpp"

#include <cmath>
#include <fstream>

#include <png.h>

#include "stitchvton/checkpoint.hpp"

namespace stitchvton {
namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::vector<std::uint8_t> encode_raw(const std::uint8_t* pixels, int height, int width, bool rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> decode_raw(const std::filesystem::path& path, bool rgb, int& height, int& width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError(path.string() + ": " + image.message);
  }
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(path.string() + ": " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(img.height()) * img.width() * 3);
  std::size_t i = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int k = 0; k < 3; ++k) px[i++] = to_byte(img.channel(k)(y, x));
    }
  }
  return encode_raw(px.data(), img.height(), img.width(), true);
}

void save_png(const std::filesystem::path& path, const Image& img) {
  write_file_bytes(path, encode_png(img));
}

Image load_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = decode_raw(path, true, h, w);
  Plane r(h, w), g(h, w), b(h, w);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      r(y, x) = buf[i++] / 255.0f;
      g(y, x) = buf[i++] / 255.0f;
      b(y, x) = buf[i++] / 255.0f;
    }
  }
  return Image(std::move(r), std::move(g), std::move(b));
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  const LabelPlane px = mask.values() * std::uint8_t{255};
  write_file_bytes(path, encode_raw(px.data(), mask.height(), mask.width(), false));
}

BinaryMask load_mask_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = decode_raw(path, false, h, w);
  LabelPlane values(h, w);
  for (int i = 0; i < h * w; ++i) values.data()[i] = buf[i] >= 128 ? 1 : 0;
  return BinaryMask(std::move(values));
}

void save_pose_map_png(const std::filesystem::path& path, const PoseMap& pm) {
  pm.validate();
  write_file_bytes(path, encode_raw(pm.labels.data(), pm.height(), pm.width(), false));
}

PoseMap load_pose_map_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = decode_raw(path, false, h, w);
  PoseMap pm{LabelPlane(h, w)};
  std::copy(buf.begin(), buf.end(), pm.labels.data());
  try {
    pm.validate();
  } catch (const ContractError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return pm;
}

nlohmann::json skeleton_to_json(const SkeletonPose& pose) {
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& j : pose.joints) {
    joints.push_back({{"name", j.name}, {"x", j.x}, {"y", j.y}, {"v", j.visible ? 1 : 0}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : pose.edges) edges.push_back({a, b});
  return {{"joints", joints}, {"edges", edges}};
}

SkeletonPose skeleton_from_json(const nlohmann::json& j) {
  SkeletonPose pose;
  for (const auto& jj : j.at("joints")) {
    pose.joints.push_back({jj.at("name").get<std::string>(), jj.at("x").get<float>(),
                           jj.at("y").get<float>(), jj.at("v").get<int>() != 0});
  }
  for (const auto& e : j.at("edges")) pose.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return pose;
}

void save_skeleton(const std::filesystem::path& path, const SkeletonPose& pose) {
  const std::string text = skeleton_to_json(pose).dump(1);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

SkeletonPose load_skeleton(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return skeleton_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Image quantize8(const Image& img) {
  auto q = [](const Plane& p) -> Plane {
    return p.unaryExpr([](float v) { return static_cast<float>(to_byte(v)) / 255.0f; });
  };
  return Image(q(img.channel(0)), q(img.channel(1)), q(img.channel(2)));
}

}  // namespace stitchvton
