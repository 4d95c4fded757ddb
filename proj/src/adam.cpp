#include "stitchvton/adam.hpp"

#include <cmath>

namespace stitchvton::nn {

void adam_step(ParameterSet& params, const GradientMap& grads, AdamState& state) {
  if (grads.size() != params.size()) {
    throw ContractError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(params.size()) + " parameters");
  }
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("adam_step: missing gradient for '" + name + "'");
    if (it->second.shape() != p.shape()) throw_shape_error("adam_step (" + name + ")", p.shape(), it->second.shape());
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.step));
  const float step_size = static_cast<float>(state.lr / bc1);
  const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));

  for (auto& [name, p] : params) {
    const auto g = grads.at(name).array();
    auto m_it = state.first_moment.try_emplace(name, Tensor::zeros(p.shape())).first;
    auto v_it = state.second_moment.try_emplace(name, Tensor::zeros(p.shape())).first;
    const Eigen::ArrayXf m = state.beta1 * m_it->second.array() + (1.0f - state.beta1) * g;
    const Eigen::ArrayXf v = state.beta2 * v_it->second.array() + (1.0f - state.beta2) * g.square();
    const Eigen::ArrayXf updated =
        p.array() - step_size * m / (v.sqrt() * inv_sqrt_bc2 + state.eps);
    m_it->second = Tensor::from_array(p.shape(), m);
    v_it->second = Tensor::from_array(p.shape(), v);
    p = Tensor::from_array(p.shape(), updated);
  }
}

}  // namespace stitchvton::nn
