#include "stitchvton/mask_ops.hpp"

#include <algorithm>
#include <sstream>

namespace stitchvton {

Image to_grayscale(const Image& img) {
  // Already-gray pixels pass through untouched; the weights sum to 1 only up to rounding.
  const auto gray = (img.channel(0) == img.channel(1)) && (img.channel(1) == img.channel(2));
  Plane y = gray.select(img.channel(0), img.luma().cwiseMax(0.0f).cwiseMin(1.0f));
  return Image(y, y, y);
}

Image apply_keep(const Image& person, const BinaryMask& keep) {
  require_same_size("apply_keep", person.height(), person.width(), keep.height(), keep.width());
  const Plane k = keep.keep_indicator();
  return Image(person.channel(0) * k, person.channel(1) * k, person.channel(2) * k);
}

Image stitch_pose_into_mask(const Image& person, const Image& pose, const BinaryMask& keep) {
  require_same_size("stitch_pose_into_mask (person vs pose)", person.height(), person.width(),
                    pose.height(), pose.width());
  require_same_size("stitch_pose_into_mask (person vs mask)", person.height(), person.width(),
                    keep.height(), keep.width());
  const auto sel = keep.values() != 0;
  return Image(sel.select(person.channel(0), pose.channel(0)),
               sel.select(person.channel(1), pose.channel(1)),
               sel.select(person.channel(2), pose.channel(2)));
}

BinaryMask derive_bbox_mask(const BinaryMask& fine) {
  int top = fine.height(), bottom = -1, left = fine.width(), right = -1;
  for (int y = 0; y < fine.height(); ++y) {
    for (int x = 0; x < fine.width(); ++x) {
      if (!fine.editable(y, x)) continue;
      top = std::min(top, y);
      bottom = std::max(bottom, y);
      left = std::min(left, x);
      right = std::max(right, x);
    }
  }
  if (bottom < 0) throw EmptyMaskError("derive_bbox_mask: mask has no editable pixel");
  LabelPlane out = LabelPlane::Ones(fine.height(), fine.width());
  out.block(top, left, bottom - top + 1, right - left + 1).setZero();
  return BinaryMask(std::move(out));
}

BinaryMask downsample_mask(const BinaryMask& keep, int factor) {
  if (factor < 1 || keep.height() % factor != 0 || keep.width() % factor != 0) {
    std::ostringstream os;
    os << "downsample_mask: " << keep.height() << "x" << keep.width() << " not divisible by " << factor;
    throw ShapeError(os.str());
  }
  const int h = keep.height() / factor, w = keep.width() / factor;
  LabelPlane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(y, x) = keep.values().block(y * factor, x * factor, factor, factor).minCoeff();
    }
  }
  return BinaryMask(std::move(out));
}

LabelPlane dilate_region(const LabelPlane& region, int radius) {
  const int h = static_cast<int>(region.rows()), w = static_cast<int>(region.cols());
  LabelPlane out = LabelPlane::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!region(y, x)) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (dx * dx + dy * dy <= radius * radius && yy >= 0 && yy < h && xx >= 0 && xx < w) {
            out(yy, xx) = 1;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace stitchvton
