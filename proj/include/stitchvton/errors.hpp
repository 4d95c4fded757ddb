#pragma once

#include <stdexcept>
#include <string>

namespace stitchvton {

/// Tensor, image or latent dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-side precondition was violated (missing key, bad ordering, missing input).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A value became NaN/Inf, or a formula hit a singularity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// derive_bbox_mask was handed a mask without any editable pixel.
class EmptyMaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File-system or codec failure; the message always names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stitchvton
