#include "stitchvton/image.hpp"

#include <sstream>
#include <stdexcept>

namespace stitchvton {

void require_same_size(const char* op, int h1, int w1, int h2, int w2) {
  if (h1 != h2 || w1 != w2) {
    std::ostringstream os;
    os << op << ": size " << h1 << "x" << w1 << " does not match " << h2 << "x" << w2;
    throw ShapeError(os.str());
  }
}

Image::Image(int height, int width) {
  if (height < 0 || width < 0) throw ShapeError("image: negative size");
  for (auto& p : rgb_) p = Plane::Zero(height, width);
}

Image::Image(Plane r, Plane g, Plane b) : rgb_{std::move(r), std::move(g), std::move(b)} {
  for (int k = 1; k < 3; ++k) {
    require_same_size("image planes", height(), width(), static_cast<int>(rgb_[k].rows()),
                      static_cast<int>(rgb_[k].cols()));
  }
  for (const auto& p : rgb_) {
    if (p.size() > 0 && (!p.isFinite().all() || p.minCoeff() < 0.0f || p.maxCoeff() > 1.0f)) {
      throw std::out_of_range("image: channel values must lie in [0,1]");
    }
  }
}

Image Image::filled(int height, int width, const Rgb& color) {
  Image img(height, width);
  for (int k = 0; k < 3; ++k) img.rgb_[k].setConstant(color[k]);
  return img;
}

void Image::set_pixel(int y, int x, const Rgb& c) {
  for (int k = 0; k < 3; ++k) {
    if (!(c[k] >= 0.0f && c[k] <= 1.0f)) throw std::out_of_range("image: channel values must lie in [0,1]");
    rgb_[k](y, x) = c[k];
  }
}

Plane Image::luma() const {
  return 0.299f * rgb_[0] + 0.587f * rgb_[1] + 0.114f * rgb_[2];
}

bool Image::operator==(const Image& other) const {
  if (height() != other.height() || width() != other.width()) return false;
  for (int k = 0; k < 3; ++k) {
    if (!(rgb_[k] == other.rgb_[k]).all()) return false;
  }
  return true;
}

BinaryMask::BinaryMask(LabelPlane values) : values_(std::move(values)) {
  if (values_.size() > 0 && values_.maxCoeff() > 1) {
    throw std::invalid_argument("binary mask: values must be 0 or 1");
  }
}

BinaryMask BinaryMask::all_keep(int height, int width) {
  return BinaryMask(LabelPlane::Ones(height, width));
}

BinaryMask BinaryMask::all_edit(int height, int width) {
  return BinaryMask(LabelPlane::Zero(height, width));
}

long BinaryMask::editable_count() const {
  return static_cast<long>((values_ == 0).count());
}

Plane BinaryMask::edit_indicator() const { return (values_ == 0).cast<float>(); }
Plane BinaryMask::keep_indicator() const { return values_.cast<float>(); }

}  // namespace stitchvton
