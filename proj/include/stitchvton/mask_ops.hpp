#pragma once

#include "stitchvton/image.hpp"

namespace stitchvton {

/// Replaces every pixel with its BT.601 luma in all three channels.
Image to_grayscale(const Image& img);

/// person where keep = 1, black where editable (I_p * M).
Image apply_keep(const Image& person, const BinaryMask& keep);

/// person where keep = 1, pose where keep = 0 (I_p * M + I_c * (1 - M)).
Image stitch_pose_into_mask(const Image& person, const Image& pose, const BinaryMask& keep);

/// Editable region becomes the minimal axis-aligned rectangle covering every
/// editable pixel of `fine`. Throws EmptyMaskError when nothing is editable.
BinaryMask derive_bbox_mask(const BinaryMask& fine);

/// Latent-resolution mask: a cell is editable iff any pixel it covers is.
BinaryMask downsample_mask(const BinaryMask& keep, int factor = kLatentPatch);

/// Binary dilation of a 0/1 region by a disc of the given radius.
LabelPlane dilate_region(const LabelPlane& region, int radius);

}  // namespace stitchvton
