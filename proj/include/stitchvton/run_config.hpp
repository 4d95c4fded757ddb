#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "stitchvton/conditioning.hpp"
#include "stitchvton/denoiser.hpp"
#include "stitchvton/latent_codec.hpp"
#include "stitchvton/sampler.hpp"
#include "stitchvton/schedule.hpp"
#include "stitchvton/trainer.hpp"

namespace stitchvton {

/// Everything that determines a run. Serialized into checkpoints, reports
/// and run.json; parsing rejects unknown keys.
struct RunConfig {
  int image_size = 64;
  ConditioningMode mode = ConditioningMode::PoseStitchGray;
  double mask_mix = 0.5;
  ScheduleConfig schedule;
  int steps = 5000;
  int batch = 8;
  double lr = 5e-4;
  std::uint64_t seed = 0;
  int ddim_steps = 25;
  double guidance = 5.0;
  bool clip_x0 = true;
  double cond_dropout = 0.1;
  bool pose_transfer = false;
  CodecConfig codec;
  DenoiserConfig net;
  std::string data_dir;
  std::string checkpoint;

  /// Throws ContractError on out-of-range values.
  void validate() const;
  TrainOptions train_options() const;
  SamplerConfig sampler() const { return {ddim_steps, static_cast<float>(guidance), clip_x0}; }

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Project version baked in at build time.
std::string code_version();

/// Writes `dir`/run.json: {code_version, command, config, extra fields}.
void write_run_json(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const nlohmann::json& extra = nlohmann::json::object());

void save_model(const std::filesystem::path& path, const RunConfig& cfg, const DenoiserNet& net);

struct LoadedModel {
  RunConfig config;
  TryOnModel model;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace stitchvton
