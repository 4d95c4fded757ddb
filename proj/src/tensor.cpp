#include "stitchvton/tensor.hpp"

#include <sstream>

namespace stitchvton {

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

void throw_shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw ShapeError(op + ": incompatible shapes " + a.str() + " and " + b.str());
}

template <typename Scalar>
void require_finite(std::span<const Scalar> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << what << ": non-finite value at flat index " << i;
      throw NumericError(os.str());
    }
  }
}

template <typename Scalar>
BasicTensor<Scalar>::BasicTensor(Shape shape, Storage data) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("tensor: negative dimension in " + shape.str());
  }
  if (data.size() != shape.numel()) {
    std::ostringstream os;
    os << "tensor: shape " << shape.str() << " needs " << shape.numel() << " values, got "
       << data.size();
    throw ShapeError(os.str());
  }
  require_finite<Scalar>(std::span<const Scalar>(data.data(), data.size()), "tensor");
  data_ = std::make_shared<const Storage>(std::move(data));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void require_finite<float>(std::span<const float>, const char*);
template void require_finite<double>(std::span<const double>, const char*);

}  // namespace stitchvton
