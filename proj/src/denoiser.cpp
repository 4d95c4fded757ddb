#include "stitchvton/denoiser.hpp"

#include <cmath>
#include <random>

namespace stitchvton {
namespace {

using nn::Var;

// Collects parameter shapes while the network layout is walked.
struct LayoutBuilder {
  nn::ParameterSet shapes;

  void conv(const std::string& name, int out, int in, int k) {
    shapes.emplace(name + ".weight", Tensor::zeros({out, in, k, k}));
    shapes.emplace(name + ".bias", Tensor::zeros({1, out, 1, 1}));
  }
  void norm(const std::string& name, int c) {
    shapes.emplace(name + ".gamma", Tensor::filled({1, c, 1, 1}, 1.0f));
    shapes.emplace(name + ".beta", Tensor::zeros({1, c, 1, 1}));
  }
  void resblock(const std::string& name, int in, int out, int temb) {
    norm(name + ".norm1", in);
    conv(name + ".conv1", out, in, 3);
    conv(name + ".temb", out, temb, 1);
    norm(name + ".norm2", out);
    conv(name + ".conv2", out, out, 3);
    if (in != out) conv(name + ".skip", out, in, 1);
  }
};

std::string enc_name(int level, int block) {
  return "enc." + std::to_string(level) + "." + std::to_string(block);
}
std::string dec_name(int level, int block) {
  return "dec." + std::to_string(level) + "." + std::to_string(block);
}

class Forward {
 public:
  Forward(nn::ParamBinder& bind, const DenoiserConfig& cfg) : bind_(bind), cfg_(cfg) {}

  Var conv(const std::string& name, const Var& x, int padding) {
    return nn::conv2d(x, bind_(name + ".weight"), bind_(name + ".bias"), 1, padding);
  }
  Var norm_act(const std::string& name, const Var& x) {
    return nn::silu(nn::group_norm(x, bind_(name + ".gamma"), bind_(name + ".beta"), cfg_.groups));
  }
  Var resblock(const std::string& name, const Var& x, const Var& temb) {
    Var h = conv(name + ".conv1", norm_act(name + ".norm1", x), 1);
    h = nn::add(h, conv(name + ".temb", temb, 0));
    h = conv(name + ".conv2", norm_act(name + ".norm2", h), 1);
    const bool has_skip = bind_.has(name + ".skip.weight");
    return nn::add(has_skip ? conv(name + ".skip", x, 0) : x, h);
  }

 private:
  nn::ParamBinder& bind_;
  const DenoiserConfig& cfg_;
};

}  // namespace

nlohmann::json DenoiserConfig::to_json() const {
  return {{"in_channels", in_channels}, {"out_channels", out_channels}, {"base_width", base_width},
          {"levels", levels}, {"blocks_per_level", blocks_per_level}, {"time_dim", time_dim},
          {"groups", groups}};
}

DenoiserConfig DenoiserConfig::from_json(const nlohmann::json& j) {
  DenoiserConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "in_channels") cfg.in_channels = value.get<int>();
    else if (key == "out_channels") cfg.out_channels = value.get<int>();
    else if (key == "base_width") cfg.base_width = value.get<int>();
    else if (key == "levels") cfg.levels = value.get<int>();
    else if (key == "blocks_per_level") cfg.blocks_per_level = value.get<int>();
    else if (key == "time_dim") cfg.time_dim = value.get<int>();
    else if (key == "groups") cfg.groups = value.get<int>();
    else throw ContractError("net: unknown key '" + key + "'");
  }
  return cfg;
}

nn::ParameterSet DenoiserNet::layout(const DenoiserConfig& cfg) {
  if (cfg.levels < 1 || cfg.blocks_per_level < 1 || cfg.base_width < 1 || cfg.time_dim < 2 ||
      cfg.time_dim % 2 != 0) {
    throw ContractError("denoiser: invalid config");
  }
  const int temb = 4 * cfg.base_width;
  LayoutBuilder b;
  b.conv("time.fc1", temb, cfg.time_dim, 1);
  b.conv("time.fc2", temb, temb, 1);
  b.conv("conv_in", cfg.base_width, cfg.in_channels, 3);
  int ch = cfg.base_width;
  for (int l = 0; l < cfg.levels; ++l) {
    for (int k = 0; k < cfg.blocks_per_level; ++k) {
      b.resblock(enc_name(l, k), ch, cfg.width_at(l), temb);
      ch = cfg.width_at(l);
    }
  }
  for (int l = cfg.levels - 2; l >= 0; --l) {
    for (int k = 0; k < cfg.blocks_per_level; ++k) {
      const int in = k == 0 ? ch + cfg.width_at(l) : cfg.width_at(l);
      b.resblock(dec_name(l, k), in, cfg.width_at(l), temb);
      ch = cfg.width_at(l);
    }
  }
  b.norm("out.norm", ch);
  b.conv("out.conv", cfg.out_channels, ch, 3);
  return std::move(b.shapes);
}

DenoiserNet DenoiserNet::create(const DenoiserConfig& cfg, std::uint64_t seed) {
  nn::ParameterSet params = layout(cfg);
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params) {
    if (name.ends_with(".weight")) t = nn::kaiming_uniform(t.shape(), rng);
  }
  return DenoiserNet(cfg, std::move(params));
}

DenoiserNet::DenoiserNet(DenoiserConfig cfg, nn::ParameterSet params) : cfg_(cfg), params_(std::move(params)) {
  const nn::ParameterSet expected = layout(cfg_);
  if (expected.size() != params_.size()) {
    throw ContractError("denoiser: expected " + std::to_string(expected.size()) + " parameters, got " +
                        std::to_string(params_.size()));
  }
  for (const auto& [name, t] : expected) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("denoiser: missing parameter '" + name + "'");
    if (it->second.shape() != t.shape()) throw_shape_error("denoiser parameter " + name, t.shape(), it->second.shape());
  }
}

Tensor timestep_embedding(std::span<const int> timesteps, int dim) {
  const int half = dim / 2;
  std::vector<float> out(timesteps.size() * dim);
  for (std::size_t n = 0; n < timesteps.size(); ++n) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      const double arg = timesteps[n] * freq;
      out[n * dim + i] = static_cast<float>(std::sin(arg));
      out[n * dim + half + i] = static_cast<float>(std::cos(arg));
    }
  }
  return Tensor({static_cast<int>(timesteps.size()), dim, 1, 1}, std::move(out));
}

Var DenoiserNet::forward(nn::ParamBinder& bind, const Var& input, std::span<const int> timesteps) const {
  const Shape s = input.shape();
  const int factor = 1 << (cfg_.levels - 1);
  if (s.c != cfg_.in_channels || s.h % factor != 0 || s.w % factor != 0) {
    throw ShapeError("denoiser: input " + s.str() + " needs " + std::to_string(cfg_.in_channels) +
                     " channels and spatial dims divisible by " + std::to_string(factor));
  }
  if (static_cast<int>(timesteps.size()) != s.n) {
    throw ShapeError("denoiser: " + std::to_string(timesteps.size()) + " timesteps for batch " + std::to_string(s.n));
  }
  Forward f(bind, cfg_);
  Var temb = nn::constant(timestep_embedding(timesteps, cfg_.time_dim));
  temb = f.conv("time.fc2", nn::silu(f.conv("time.fc1", temb, 0)), 0);
  temb = nn::silu(temb);

  Var h = f.conv("conv_in", input, 1);
  std::vector<Var> skips;
  for (int l = 0; l < cfg_.levels; ++l) {
    for (int k = 0; k < cfg_.blocks_per_level; ++k) h = f.resblock(enc_name(l, k), h, temb);
    if (l + 1 < cfg_.levels) {
      skips.push_back(h);
      h = nn::avg_pool2x(h);
    }
  }
  for (int l = cfg_.levels - 2; l >= 0; --l) {
    const std::array<Var, 2> parts = {nn::upsample_nearest2x(h), skips[l]};
    h = nn::concat_channels<float>(parts);
    for (int k = 0; k < cfg_.blocks_per_level; ++k) h = f.resblock(dec_name(l, k), h, temb);
  }
  return f.conv("out.conv", f.norm_act("out.norm", h), 1);
}

Tensor DenoiserNet::predict(const Tensor& input, std::span<const int> timesteps) const {
  nn::ParamBinder bind(params_, false);
  return forward(bind, nn::constant(input), timesteps).value();
}

}  // namespace stitchvton
