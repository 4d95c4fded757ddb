#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "stitchvton/autograd.hpp"

namespace stitchvton::nn {

/// Named trainable tensors. Ordered so every traversal is deterministic.
using ParameterSet = std::map<std::string, Tensor>;
using GradientMap = std::map<std::string, Tensor>;

std::size_t parameter_count(const ParameterSet& params);

/// Kaiming-uniform fan-in bound sqrt(6 / fan_in) for a (out, in, kh, kw) weight.
Tensor kaiming_uniform(Shape weight_shape, std::mt19937_64& rng);

/// Lends the tensors of a ParameterSet to one graph as leaf variables.
class ParamBinder {
 public:
  ParamBinder(const ParameterSet& params, bool requires_grad)
      : params_(&params), requires_grad_(requires_grad) {}

  /// Leaf for `name`; the same node is returned on repeated lookups.
  Var operator()(const std::string& name);
  bool has(const std::string& name) const { return params_->count(name) > 0; }

  /// Gradient of every bound parameter. Parameters never looked up get zeros.
  GradientMap gradients(const Gradients<float>& grads) const;

 private:
  const ParameterSet* params_;
  bool requires_grad_;
  std::map<std::string, Var> bound_;
};

/// Sum of `maps` in the order given, scaled by `scale`. All maps must share keys.
GradientMap reduce_gradients(const std::vector<GradientMap>& maps, float scale);

}  // namespace stitchvton::nn
