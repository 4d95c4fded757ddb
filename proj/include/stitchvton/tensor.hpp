#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "stitchvton/errors.hpp"

namespace stitchvton {

/// (batch, channels, height, width).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Packet-aligned buffer. Eigen picks its vectorized traversal from the
/// address, so aligned storage keeps float reductions independent of heap
/// layout and therefore of thread count.
template <typename Scalar>
using AlignedVector = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

/// Immutable dense NCHW tensor with shared storage. Copies are cheap and
/// never alias mutable state.
template <typename Scalar>
class BasicTensor {
 public:
  using Storage = AlignedVector<Scalar>;
  using ArrayMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

  BasicTensor() : data_(std::make_shared<const Storage>()) {}

  /// Throws ShapeError on a length mismatch and NumericError on NaN/Inf.
  BasicTensor(Shape shape, Storage data);
  template <typename Alloc>
    requires(!std::is_same_v<std::vector<Scalar, Alloc>, Storage>)
  BasicTensor(Shape shape, const std::vector<Scalar, Alloc>& data)
      : BasicTensor(shape, Storage(data.begin(), data.end())) {}

  static BasicTensor zeros(Shape shape) {
    return BasicTensor(shape, Storage(shape.numel(), Scalar(0)));
  }
  static BasicTensor filled(Shape shape, Scalar value) {
    return BasicTensor(shape, Storage(shape.numel(), value));
  }
  template <typename Derived>
  static BasicTensor from_array(Shape shape, const Eigen::ArrayBase<Derived>& values) {
    Storage data(values.size());
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(data.data(), values.size()) = values;
    return BasicTensor(shape, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_->size(); }

  std::span<const Scalar> data() const { return {data_->data(), data_->size()}; }
  ArrayMap array() const { return ArrayMap(data_->data(), static_cast<Eigen::Index>(data_->size())); }

  Scalar at(int n, int c, int h, int w) const {
    return (*data_)[index(n, c, h, w)];
  }
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  /// Copy out a mutable buffer, e.g. to build a modified tensor.
  Storage to_vector() const { return *data_; }

  template <typename Other>
  BasicTensor<Other> cast() const {
    typename BasicTensor<Other>::Storage out(data_->begin(), data_->end());
    return BasicTensor<Other>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::shared_ptr<const Storage> data_;
};

using Tensor = BasicTensor<float>;

/// Throws NumericError naming `what` if any entry is NaN/Inf.
template <typename Scalar>
void require_finite(std::span<const Scalar> values, const char* what);

[[noreturn]] void throw_shape_error(const std::string& op, const Shape& a, const Shape& b);

}  // namespace stitchvton
