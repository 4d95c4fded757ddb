#include "stitchvton/schedule.hpp"

#include <cmath>
#include <sstream>

namespace stitchvton {
namespace {

template <typename S>
BasicTensor<S> combine(const BasicTensor<S>& a, double wa, const BasicTensor<S>& b, double wb) {
  if (a.shape() != b.shape()) throw_shape_error("diffusion", a.shape(), b.shape());
  const Eigen::ArrayXd out = wa * a.array().template cast<double>() + wb * b.array().template cast<double>();
  return BasicTensor<S>::from_array(a.shape(), out.cast<S>());
}

}  // namespace

nlohmann::json ScheduleConfig::to_json() const {
  return {{"steps", steps}, {"beta_start", beta_start}, {"beta_end", beta_end}};
}

ScheduleConfig ScheduleConfig::from_json(const nlohmann::json& j) {
  ScheduleConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "steps") {
      cfg.steps = value.get<int>();
    } else if (key == "beta_start") {
      cfg.beta_start = value.get<double>();
    } else if (key == "beta_end") {
      cfg.beta_end = value.get<double>();
    } else {
      throw ContractError("schedule: unknown key '" + key + "'");
    }
  }
  return cfg;
}

NoiseSchedule::NoiseSchedule(ScheduleConfig cfg) : cfg_(cfg) {
  if (cfg_.steps < 1) throw ContractError("schedule: steps must be >= 1");
  if (!(cfg_.beta_start > 0.0 && cfg_.beta_end < 1.0 && cfg_.beta_start <= cfg_.beta_end)) {
    throw ContractError("schedule: need 0 < beta_start <= beta_end < 1");
  }
  beta_ = Eigen::VectorXd::Zero(cfg_.steps + 1);
  if (cfg_.steps == 1) {
    beta_(1) = cfg_.beta_start;
  } else {
    beta_.tail(cfg_.steps) = Eigen::VectorXd::LinSpaced(cfg_.steps, cfg_.beta_start, cfg_.beta_end);
  }
  alpha_bar_ = Eigen::VectorXd::Ones(cfg_.steps + 1);
  for (int t = 1; t <= cfg_.steps; ++t) alpha_bar_(t) = alpha_bar_(t - 1) * (1.0 - beta_(t));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > cfg_.steps) {
    throw ContractError("schedule: timestep " + std::to_string(t) + " outside [0, " + std::to_string(cfg_.steps) + "]");
  }
  return alpha_bar_(t);
}

double NoiseSchedule::beta(int t) const {
  alpha_bar(t);
  return beta_(t);
}

std::vector<int> NoiseSchedule::ddim_timesteps(int count) const {
  if (count < 1 || count > cfg_.steps) {
    throw ContractError("ddim_timesteps: count must lie in [1, " + std::to_string(cfg_.steps) + "]");
  }
  std::vector<int> ts;
  for (int i = 0; i < count; ++i) {
    ts.push_back(static_cast<int>(std::lround(static_cast<double>(cfg_.steps) * (count - i) / count)));
  }
  ts.push_back(0);
  return ts;
}

template <typename S>
BasicTensor<S> forward_diffuse_at(const BasicTensor<S>& x0, double alpha_bar, const BasicTensor<S>& eps) {
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) throw ContractError("forward_diffuse: alpha_bar outside [0,1]");
  return combine(x0, std::sqrt(alpha_bar), eps, std::sqrt(1.0 - alpha_bar));
}

template <typename S>
BasicTensor<S> forward_diffuse(const NoiseSchedule& schedule, const BasicTensor<S>& x0, int t,
                               const BasicTensor<S>& eps) {
  return forward_diffuse_at(x0, schedule.alpha_bar(t), eps);
}

template <typename S>
BasicTensor<S> predict_x0_at(const BasicTensor<S>& x_t, const BasicTensor<S>& eps_hat, double alpha_bar) {
  if (!(alpha_bar > 0.0)) throw NumericError("predict_x0: alpha_bar = 0 has no inverse");
  if (alpha_bar > 1.0) throw ContractError("predict_x0: alpha_bar above 1");
  const double inv = 1.0 / std::sqrt(alpha_bar);
  return combine(x_t, inv, eps_hat, -std::sqrt(1.0 - alpha_bar) * inv);
}

template <typename S>
BasicTensor<S> predict_x0(const NoiseSchedule& schedule, const BasicTensor<S>& x_t, const BasicTensor<S>& eps_hat,
                          int t) {
  return predict_x0_at(x_t, eps_hat, schedule.alpha_bar(t));
}

#define STITCHVTON_INSTANTIATE(S)                                                                       \
  template BasicTensor<S> forward_diffuse_at<S>(const BasicTensor<S>&, double, const BasicTensor<S>&);  \
  template BasicTensor<S> forward_diffuse<S>(const NoiseSchedule&, const BasicTensor<S>&, int,          \
                                             const BasicTensor<S>&);                                    \
  template BasicTensor<S> predict_x0_at<S>(const BasicTensor<S>&, const BasicTensor<S>&, double);       \
  template BasicTensor<S> predict_x0<S>(const NoiseSchedule&, const BasicTensor<S>&, const BasicTensor<S>&, int);

STITCHVTON_INSTANTIATE(float)
STITCHVTON_INSTANTIATE(double)
#undef STITCHVTON_INSTANTIATE

Tensor ddim_step(const NoiseSchedule& schedule, const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev) {
  if (t_prev >= t) {
    throw ContractError("ddim_step: t_prev (" + std::to_string(t_prev) + ") must precede t (" + std::to_string(t) + ")");
  }
  if (x_t.shape() != eps_hat.shape()) throw_shape_error("ddim_step", x_t.shape(), eps_hat.shape());
  const double a = schedule.alpha_bar(t);
  const double a_prev = schedule.alpha_bar(t_prev);
  if (!(a > 0.0)) throw NumericError("ddim_step: alpha_bar(t) = 0");
  // Fold x0_hat into one linear combination of x_t and eps_hat.
  const double sa = std::sqrt(a), sp = std::sqrt(a_prev);
  const double wx = sp / sa;
  const double we = std::sqrt(1.0 - a_prev) - sp * std::sqrt(1.0 - a) / sa;
  return combine(x_t, wx, eps_hat, we);
}

Tensor eps_from_x0(const NoiseSchedule& schedule, const Tensor& x_t, const Tensor& x0, int t) {
  const double a = schedule.alpha_bar(t);
  if (!(a < 1.0)) throw NumericError("eps_from_x0: alpha_bar = 1 carries no noise");
  const double inv = 1.0 / std::sqrt(1.0 - a);
  return combine(x_t, inv, x0, -std::sqrt(a) * inv);
}

Tensor cfg_noise(const Tensor& eps_cond, const Tensor& eps_uncond, float scale) {
  return combine(eps_uncond, 1.0 - static_cast<double>(scale), eps_cond, static_cast<double>(scale));
}

}  // namespace stitchvton
