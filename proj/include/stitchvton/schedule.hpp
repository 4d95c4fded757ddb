#pragma once

#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "stitchvton/tensor.hpp"

namespace stitchvton {

struct ScheduleConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  nlohmann::json to_json() const;
  static ScheduleConfig from_json(const nlohmann::json& j);
};

/// Linear beta schedule and its cumulative product table. alpha_bar(0) = 1,
/// alpha_bar(t) = prod_{s=1..t} (1 - beta_s).
class NoiseSchedule {
 public:
  explicit NoiseSchedule(ScheduleConfig cfg = {});

  int steps() const { return cfg_.steps; }
  const ScheduleConfig& config() const { return cfg_; }
  /// Throws ContractError outside [0, steps()].
  double alpha_bar(int t) const;
  double beta(int t) const;
  const Eigen::VectorXd& alpha_bars() const { return alpha_bar_; }

  /// `count` evenly spaced timesteps from T down, followed by 0:
  /// T, T - T/count, ..., T/count, 0.
  std::vector<int> ddim_timesteps(int count) const;

 private:
  ScheduleConfig cfg_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd alpha_bar_;
};

/// sqrt(a) x0 + sqrt(1 - a) eps for an explicit cumulative alpha.
/// Instantiated for float and double; the float inverse loses about
/// eps_float / sqrt(a) near t = T.
template <typename S>
BasicTensor<S> forward_diffuse_at(const BasicTensor<S>& x0, double alpha_bar, const BasicTensor<S>& eps);
template <typename S>
BasicTensor<S> forward_diffuse(const NoiseSchedule& schedule, const BasicTensor<S>& x0, int t,
                               const BasicTensor<S>& eps);

/// (x_t - sqrt(1 - a) eps_hat) / sqrt(a). Throws NumericError when a = 0.
template <typename S>
BasicTensor<S> predict_x0_at(const BasicTensor<S>& x_t, const BasicTensor<S>& eps_hat, double alpha_bar);
template <typename S>
BasicTensor<S> predict_x0(const NoiseSchedule& schedule, const BasicTensor<S>& x_t, const BasicTensor<S>& eps_hat,
                          int t);

/// Noise implied by x_t and an x0 estimate: (x_t - sqrt(a) x0) / sqrt(1 - a).
/// Throws NumericError when a = 1 (t = 0).
Tensor eps_from_x0(const NoiseSchedule& schedule, const Tensor& x_t, const Tensor& x0, int t);

/// Deterministic (eta = 0) DDIM update from t to t_prev < t.
Tensor ddim_step(const NoiseSchedule& schedule, const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev);

/// eps_uncond + scale (eps_cond - eps_uncond).
Tensor cfg_noise(const Tensor& eps_cond, const Tensor& eps_uncond, float scale);

}  // namespace stitchvton
