#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "stitchvton/errors.hpp"

namespace stitchvton {

template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<float>;
using LabelPlane = PlaneT<std::uint8_t>;

/// Side length of one latent cell in pixels.
inline constexpr int kLatentPatch = 8;

using Rgb = std::array<float, 3>;

/// RGB image, channel values in [0,1].
class Image {
 public:
  Image() = default;
  /// Black image.
  Image(int height, int width);
  /// Throws ShapeError on unequal planes, std::out_of_range outside [0,1].
  Image(Plane r, Plane g, Plane b);

  static Image filled(int height, int width, const Rgb& color);

  int height() const { return static_cast<int>(rgb_[0].rows()); }
  int width() const { return static_cast<int>(rgb_[0].cols()); }

  const Plane& channel(int k) const { return rgb_.at(k); }
  Rgb pixel(int y, int x) const { return {rgb_[0](y, x), rgb_[1](y, x), rgb_[2](y, x)}; }
  void set_pixel(int y, int x, const Rgb& c);

  /// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
  Plane luma() const;

  bool operator==(const Image& other) const;

 private:
  std::array<Plane, 3> rgb_;
};

/// Binary mask, 1 = preserved context, 0 = editable.
class BinaryMask {
 public:
  BinaryMask() = default;
  /// Throws std::invalid_argument if any value is not 0 or 1.
  explicit BinaryMask(LabelPlane values);

  static BinaryMask all_keep(int height, int width);
  static BinaryMask all_edit(int height, int width);

  int height() const { return static_cast<int>(values_.rows()); }
  int width() const { return static_cast<int>(values_.cols()); }
  bool keep(int y, int x) const { return values_(y, x) != 0; }
  bool editable(int y, int x) const { return values_(y, x) == 0; }
  void set(int y, int x, bool keep_pixel) { values_(y, x) = keep_pixel ? 1 : 0; }

  long editable_count() const;
  const LabelPlane& values() const { return values_; }
  /// 1.0 where editable.
  Plane edit_indicator() const;
  /// 1.0 where preserved.
  Plane keep_indicator() const;

  bool operator==(const BinaryMask& other) const {
    return values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
           (values_ == other.values_).all();
  }

 private:
  LabelPlane values_;
};

void require_same_size(const char* op, int h1, int w1, int h2, int w2);

}  // namespace stitchvton
