#pragma once

#include <cstdint>
#include <span>

#include <nlohmann/json.hpp>

#include "stitchvton/parameters.hpp"

namespace stitchvton {

struct DenoiserConfig {
  int in_channels = 9;
  int out_channels = 4;
  int base_width = 32;
  int levels = 3;
  int blocks_per_level = 2;
  int time_dim = 64;
  int groups = 4;

  int width_at(int level) const { return base_width << level; }
  nlohmann::json to_json() const;
  static DenoiserConfig from_json(const nlohmann::json& j);
};

/// Convolutional UNet predicting epsilon from the 9-channel stacked input.
/// Residual blocks use group norm + SiLU with a sinusoidal timestep
/// embedding projected and added per block.
class DenoiserNet {
 public:
  /// Kaiming-uniform conv weights, zero biases, unit norm gains.
  static DenoiserNet create(const DenoiserConfig& cfg, std::uint64_t seed);

  /// Throws ContractError if `params` does not match the layout of `cfg`.
  DenoiserNet(DenoiserConfig cfg, nn::ParameterSet params);

  /// N x in x H x W -> N x out x H x W; H and W must be divisible by 2^(levels-1).
  nn::Var forward(nn::ParamBinder& bind, const nn::Var& input, std::span<const int> timesteps) const;

  /// Gradient-free forward pass.
  Tensor predict(const Tensor& input, std::span<const int> timesteps) const;

  const DenoiserConfig& config() const { return cfg_; }
  const nn::ParameterSet& params() const { return params_; }
  nn::ParameterSet& mutable_params() { return params_; }
  std::size_t parameter_count() const { return nn::parameter_count(params_); }

  /// Expected name -> shape layout for a config.
  static nn::ParameterSet layout(const DenoiserConfig& cfg);

 private:
  DenoiserConfig cfg_;
  nn::ParameterSet params_;
};

/// N x dim x 1 x 1 sinusoidal embedding of integer timesteps.
Tensor timestep_embedding(std::span<const int> timesteps, int dim);

}  // namespace stitchvton
