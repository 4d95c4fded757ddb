#include "stitchvton/parameters.hpp"

#include <cmath>

namespace stitchvton::nn {

std::size_t parameter_count(const ParameterSet& params) {
  std::size_t total = 0;
  for (const auto& [name, t] : params) total += t.size();
  return total;
}

Tensor kaiming_uniform(Shape weight_shape, std::mt19937_64& rng) {
  const int fan_in = weight_shape.c * weight_shape.h * weight_shape.w;
  if (fan_in <= 0) throw ShapeError("kaiming_uniform: empty fan-in for " + weight_shape.str());
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-bound, bound);
  std::vector<float> data(weight_shape.numel());
  for (auto& v : data) v = dist(rng);
  return Tensor(weight_shape, std::move(data));
}

Var ParamBinder::operator()(const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  auto pit = params_->find(name);
  if (pit == params_->end()) throw ContractError("parameter '" + name + "' does not exist");
  Var v = requires_grad_ ? parameter(pit->second) : constant(pit->second);
  bound_.emplace(name, v);
  return v;
}

GradientMap ParamBinder::gradients(const Gradients<float>& grads) const {
  GradientMap out;
  for (const auto& [name, t] : *params_) {
    auto it = bound_.find(name);
    if (it != bound_.end() && grads.contains(it->second)) {
      out.emplace(name, grads.of(it->second));
    } else {
      out.emplace(name, Tensor::zeros(t.shape()));
    }
  }
  return out;
}

GradientMap reduce_gradients(const std::vector<GradientMap>& maps, float scale) {
  if (maps.empty()) throw ContractError("reduce_gradients: nothing to reduce");
  GradientMap out;
  for (const auto& [name, first] : maps.front()) {
    Eigen::ArrayXf acc = first.array();
    for (std::size_t k = 1; k < maps.size(); ++k) {
      auto it = maps[k].find(name);
      if (it == maps[k].end()) throw ContractError("reduce_gradients: '" + name + "' missing in shard");
      if (it->second.shape() != first.shape()) throw_shape_error("reduce_gradients", first.shape(), it->second.shape());
      acc += it->second.array();
    }
    out.emplace(name, Tensor::from_array(first.shape(), acc * scale));
  }
  return out;
}

}  // namespace stitchvton::nn
