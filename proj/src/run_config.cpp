#include "stitchvton/run_config.hpp"

#include "stitchvton/checkpoint.hpp"
#include "stitchvton/errors.hpp"

#ifndef STITCHVTON_VERSION
#define STITCHVTON_VERSION "unknown"
#endif

namespace stitchvton {
namespace {

template <typename T>
T read(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ContractError("config: bad value for '" + key + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ContractError(std::string("config: ") + what);
  };
  check(image_size > 0 && image_size % kLatentPatch == 0 && image_size <= 256,
        "image_size must be a multiple of 8 in [8, 256]");
  check(mask_mix >= 0.0 && mask_mix <= 1.0, "mask_mix must lie in [0, 1]");
  check(schedule.steps > 0 && schedule.beta_start > 0.0 && schedule.beta_end < 1.0 &&
            schedule.beta_start <= schedule.beta_end,
        "schedule needs steps > 0 and 0 < beta_start <= beta_end < 1");
  check(steps >= 0, "steps must be >= 0");
  check(batch > 0, "batch must be positive");
  check(lr > 0.0, "lr must be positive");
  check(ddim_steps > 0 && ddim_steps <= schedule.steps, "ddim_steps must lie in [1, schedule.steps]");
  check(guidance >= 1.0, "guidance must be >= 1");
  check(cond_dropout >= 0.0 && cond_dropout < 1.0, "cond_dropout must lie in [0, 1)");
  check(net.in_channels == kModelInputChannels && net.out_channels == kLatentChannels,
        "net must map 9 channels to 4");
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.batch = batch;
  o.lr = static_cast<float>(lr);
  o.mask_mix = mask_mix;
  o.cond_dropout = cond_dropout;
  o.pose_transfer = pose_transfer;
  o.seed = seed;
  return o;
}

nlohmann::json RunConfig::to_json() const {
  return {{"image_size", image_size},
          {"mode", std::string(mode_name(mode))},
          {"mask_mix", mask_mix},
          {"schedule", schedule.to_json()},
          {"steps", steps},
          {"batch", batch},
          {"lr", lr},
          {"seed", seed},
          {"ddim_steps", ddim_steps},
          {"guidance", guidance},
          {"clip_x0", clip_x0},
          {"cond_dropout", cond_dropout},
          {"pose_transfer", pose_transfer},
          {"codec", codec.to_json()},
          {"net", net.to_json()},
          {"paths", {{"data_dir", data_dir}, {"checkpoint", checkpoint}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ContractError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "image_size") c.image_size = read<int>(v, key);
    else if (key == "mode") c.mode = parse_mode(read<std::string>(v, key));
    else if (key == "mask_mix") c.mask_mix = read<double>(v, key);
    else if (key == "schedule") c.schedule = ScheduleConfig::from_json(v);
    else if (key == "steps") c.steps = read<int>(v, key);
    else if (key == "batch") c.batch = read<int>(v, key);
    else if (key == "lr") c.lr = read<double>(v, key);
    else if (key == "seed") c.seed = read<std::uint64_t>(v, key);
    else if (key == "ddim_steps") c.ddim_steps = read<int>(v, key);
    else if (key == "guidance") c.guidance = read<double>(v, key);
    else if (key == "clip_x0") c.clip_x0 = read<bool>(v, key);
    else if (key == "cond_dropout") c.cond_dropout = read<double>(v, key);
    else if (key == "pose_transfer") c.pose_transfer = read<bool>(v, key);
    else if (key == "codec") c.codec = CodecConfig::from_json(v);
    else if (key == "net") c.net = DenoiserConfig::from_json(v);
    else if (key == "paths") {
      for (const auto& [pk, pv] : v.items()) {
        if (pk == "data_dir") c.data_dir = read<std::string>(pv, pk);
        else if (pk == "checkpoint") c.checkpoint = read<std::string>(pv, pk);
        else throw ContractError("config: unknown key 'paths." + pk + "'");
      }
    } else {
      throw ContractError("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string code_version() { return STITCHVTON_VERSION; }

void write_run_json(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    const nlohmann::json& extra) {
  nlohmann::json j = {{"code_version", code_version()}, {"command", command}, {"config", cfg.to_json()}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  const std::string text = j.dump(2) + "\n";
  std::filesystem::create_directories(dir);
  write_file_bytes(dir / "run.json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_model(const std::filesystem::path& path, const RunConfig& cfg, const DenoiserNet& net) {
  save_checkpoint(path, Checkpoint{cfg.to_json().dump(), net.params()});
}

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  RunConfig cfg;
  try {
    cfg = RunConfig::from_json(nlohmann::json::parse(ckpt.config_json));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": bad embedded config: " + e.what());
  }
  DenoiserNet net(cfg.net, std::move(ckpt.params));
  return {cfg, TryOnModel{std::move(net), NoiseSchedule(cfg.schedule), cfg.codec}};
}

}  // namespace stitchvton
