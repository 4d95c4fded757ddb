#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include <CLI11.hpp>

#include "stitchvton/checkpoint.hpp"
#include "stitchvton/errors.hpp"
#include "stitchvton/evaluation.hpp"
#include "stitchvton/io.hpp"
#include "stitchvton/mask_ops.hpp"
#include "stitchvton/run_config.hpp"
#include "stitchvton/synth.hpp"
#include "stitchvton/trainer.hpp"

namespace stitchvton::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

ConditioningMode mode_arg(const std::string& text) {
  try {
    return parse_mode(text);
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
}

MaskStrategy strategy_arg(const std::string& text) {
  try {
    return parse_strategy(text);
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
}

std::vector<synth::SpriteSample> load_split(const fs::path& data, const std::string& split, int limit) {
  const synth::Manifest m = synth::load_manifest(data);
  std::vector<synth::SpriteSample> out;
  for (const auto* e : m.split(split)) {
    if (limit > 0 && static_cast<int>(out.size()) == limit) break;
    out.push_back(synth::load_sample(data / e->path));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenData {
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool pose_transfer = false;
  int size = 64;
  double train_fraction = 0.9;

  int run(std::ostream& os) const {
    RunConfig cfg;
    cfg.image_size = size;
    cfg.seed = seed;
    cfg.pose_transfer = pose_transfer;
    cfg.data_dir = out;
    cfg.validate();
    const synth::Manifest m = synth::generate_dataset(n, seed, out, train_fraction, pose_transfer, size);
    write_run_json(out, "gen-data", cfg, {{"n", n}, {"train_fraction", train_fraction}});
    os << "wrote " << m.samples.size() << " samples (" << m.split("train").size() << " train) to " << out << "\n";
    return kExitOk;
  }
};

struct Train {
  std::string config;
  std::string data;
  std::string out_ckpt;
  std::string mode;
  int steps = -1;
  int log_every = 100;

  int run(std::ostream& os) const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    if (!mode.empty()) cfg.mode = mode_arg(mode);
    if (steps >= 0) cfg.steps = steps;
    cfg.data_dir = data;
    cfg.checkpoint = out_ckpt;
    cfg.validate();

    const synth::Manifest manifest = synth::load_manifest(data);
    if (manifest.image_size != cfg.image_size) {
      throw ContractError("data image size " + std::to_string(manifest.image_size) + " differs from config " +
                          std::to_string(cfg.image_size));
    }
    std::vector<TrainingExample> examples;
    for (const auto* e : manifest.split("train")) {
      examples.push_back(prepare_example(synth::load_sample(fs::path(data) / e->path), cfg.mode, cfg.codec));
    }
    Trainer trainer(DenoiserNet::create(cfg.net, cfg.seed), NoiseSchedule(cfg.schedule), cfg.mode,
                    std::move(examples), cfg.train_options());
    std::string csv = "step,loss,fine,dropped\n";
    trainer.run(cfg.steps, [&](const StepReport& r) {
      csv += std::to_string(r.step) + "," + std::to_string(r.loss) + "," + std::to_string(r.fine_count) + "," +
             std::to_string(r.dropped_count) + "\n";
      if (log_every > 0 && r.step % log_every == 0) os << "step " << r.step << " loss " << r.loss << "\n";
    });
    save_model(out_ckpt, cfg, trainer.net());
    const fs::path dir = dir_of(out_ckpt);
    write_text(dir / "loss.csv", csv);
    write_run_json(dir, "train", cfg, {{"parameter_count", trainer.net().parameter_count()}});
    os << "saved " << out_ckpt << "\n";
    return kExitOk;
  }
};

struct Infer {
  std::string ckpt, person, garment, mask, mode, pose_skeleton, pose_map, strategy = "fine", out;
  std::uint64_t seed = 0;

  int run(std::ostream& os, std::ostream& es) const {
    const ConditioningMode m = mode_arg(mode);
    if (uses_skeleton(m) && pose_skeleton.empty()) {
      throw UsageError("mode " + mode + " requires --pose-skeleton");
    }
    if (uses_pose_map(m) && pose_map.empty()) throw UsageError("mode " + mode + " requires --pose-map");
    const MaskStrategy s = strategy_arg(strategy);

    LoadedModel loaded = load_model(ckpt);
    if (loaded.config.mode != m) {
      es << "warning: checkpoint was trained for " << mode_name(loaded.config.mode) << "\n";
    }
    TryOnRequest req{load_png(person), load_png(garment), {}, load_mask_png(mask), m, s, seed};
    if (!pose_skeleton.empty()) req.pose.skeleton = load_skeleton(pose_skeleton);
    if (!pose_map.empty()) req.pose.pose_map = load_pose_map_png(pose_map);
    const Image result = sample_tryon(loaded.model, req, loaded.config.sampler());
    save_png(out, result);
    RunConfig cfg = loaded.config;
    cfg.mode = m;
    cfg.checkpoint = ckpt;
    write_run_json(dir_of(out), "infer", cfg,
                   {{"seed", seed}, {"mask_strategy", std::string(strategy_name(s))}, {"output", out}});
    os << "wrote " << out << "\n";
    return kExitOk;
  }
};

struct ShowConditioning {
  std::string sample, mode, strategy = "fine", out;
  int t = 500;
  std::uint64_t seed = 0;

  int run(std::ostream& os) const {
    const ConditioningMode m = mode_arg(mode);
    const MaskStrategy s = strategy_arg(strategy);
    const synth::SpriteSample sp = synth::load_sample(sample);
    RunConfig cfg;
    cfg.mode = m;
    cfg.image_size = sp.person.height();
    const CodecConfig& codec = cfg.codec;
    const NoiseSchedule schedule(cfg.schedule);
    if (t < 0 || t > schedule.steps()) throw UsageError("--t must lie in [0, " + std::to_string(schedule.steps()) + "]");

    const BinaryMask& keep = s == MaskStrategy::FineGrained ? sp.fine : sp.bbox;
    const ConditionImages cond = build_condition_image(m, sp.person, keep, PoseInputs{sp.skeleton, sp.pose_map});
    const Tensor x0 = encode(sp.truth, codec).values;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<float> eps(x0.shape().numel());
    for (float& e : eps) e = normal(rng);
    const Tensor x_t = forward_diffuse(schedule, x0, t, Tensor(x0.shape(), std::move(eps)));
    std::optional<Tensor> pose;
    if (cond.side_pose) pose = encode(*cond.side_pose, codec, LatentTag::Pose).values;
    const LatentBundle bundle = assemble_input(m, x_t, encode(cond.masked_person, codec, LatentTag::Masked).values,
                                               encode(sp.garment, codec, LatentTag::Garment).values, pose,
                                               edit_plane(downsample_mask(keep)));
    const Tensor stacked = bundle.stacked();
    save_png(out, latent_mosaic(stacked));
    const fs::path dir = dir_of(out);
    const fs::path stem = fs::path(out).stem();
    save_png(dir / (stem.string() + "_masked.png"), cond.masked_person);
    if (cond.side_pose) save_png(dir / (stem.string() + "_pose.png"), *cond.side_pose);
    write_run_json(dir, "show-conditioning", cfg,
                   {{"sample", sample},
                    {"mask_strategy", std::string(strategy_name(s))},
                    {"t", t},
                    {"seed", seed},
                    {"input_shape", stacked.shape().str()}});
    os << "input " << stacked.shape().str() << " -> " << out << "\n";
    return kExitOk;
  }
};

struct Eval {
  std::vector<std::string> ckpts, modes;
  std::string data, report, strategy = "bbox", split = "test";
  int limit = 0;
  std::uint64_t seed = 0;
  bool pose_transfer = false;

  int run(std::ostream& os) const {
    if (ckpts.size() != 1 && ckpts.size() != modes.size()) {
      throw UsageError("--ckpt takes one checkpoint or one per mode");
    }
    std::vector<ConditioningMode> ms;
    for (const auto& m : modes) ms.push_back(mode_arg(m));
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (std::count(ms.begin(), ms.end(), ms[i]) > 1) throw UsageError("mode listed twice: " + modes[i]);
    }
    EvalOptions opt;
    opt.strategy = strategy_arg(strategy);
    opt.seed = seed;
    opt.pose_transfer = pose_transfer;
    const std::vector<synth::SpriteSample> samples = load_split(data, split, limit);

    std::vector<ModeReport> reports;
    nlohmann::json per_mode = nlohmann::json::object(), configs = nlohmann::json::object();
    RunConfig last;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string& path = ckpts.size() == 1 ? ckpts.front() : ckpts[i];
      const LoadedModel loaded = load_model(path);
      opt.sampler = loaded.config.sampler();
      reports.push_back(evaluate_mode(loaded.model, ms[i], samples, opt));
      nlohmann::json entry = reports.back().to_json();
      entry.erase("mode");
      per_mode[std::string(mode_name(ms[i]))] = entry;
      configs[std::string(mode_name(ms[i]))] = loaded.config.to_json();
      last = loaded.config;
      os << report_csv({reports.back()}).substr(report_csv({}).size());
    }
    const nlohmann::json doc = {{"code_version", code_version()},
                                {"split", split},
                                {"mask_strategy", std::string(strategy_name(opt.strategy))},
                                {"seed", seed},
                                {"pose_transfer", pose_transfer},
                                {"modes", per_mode},
                                {"configs", configs}};
    write_text(report, doc.dump(2) + "\n");
    fs::path csv = report;
    csv.replace_extension(".csv");
    write_text(csv, report_csv(reports));
    last.data_dir = data;
    write_run_json(dir_of(report), "eval", last, {{"report", report}, {"checkpoints", ckpts}});
    return kExitOk;
  }
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-diffusion virtual try-on with pose stitching", "stitchvton"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string modes_help = "conditioning mode:";
  for (auto m : all_modes()) modes_help += " " + std::string(mode_name(m));

  GenData gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic try-on corpus");
  c_gen->add_option("--n", gen.n, "Number of samples")->required()->check(CLI::NonNegativeNumber);
  c_gen->add_option("--seed", gen.seed, "Generator seed")->required();
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_flag("--pose-transfer", gen.pose_transfer, "Also render a re-posed target per sample");
  c_gen->add_option("--size", gen.size, "Image side in pixels")->capture_default_str();
  c_gen->add_option("--train-fraction", gen.train_fraction, "Fraction of samples in the train split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  Train train;
  auto* c_train = app.add_subcommand("train", "Train a denoiser for one conditioning mode");
  c_train->add_option("--config", train.config, "Run config JSON (defaults when omitted)")->check(CLI::ExistingFile);
  c_train->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  c_train->add_option("--out-ckpt", train.out_ckpt, "Checkpoint to write")->required();
  c_train->add_option("--mode", train.mode, "Override the config mode; " + modes_help);
  c_train->add_option("--steps", train.steps, "Override the config step count");
  c_train->add_option("--log-every", train.log_every, "Print the loss every N steps (0 = quiet)")
      ->capture_default_str();

  Infer infer;
  auto* c_infer = app.add_subcommand("infer", "Run a single try-on");
  c_infer->add_option("--ckpt", infer.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_infer->add_option("--person", infer.person, "Person PNG")->required()->check(CLI::ExistingFile);
  c_infer->add_option("--garment", infer.garment, "Garment PNG")->required()->check(CLI::ExistingFile);
  c_infer->add_option("--mask", infer.mask, "Mask PNG (white = keep)")->required()->check(CLI::ExistingFile);
  c_infer->add_option("--mode", infer.mode, modes_help)->required();
  auto* o_skel = c_infer->add_option("--pose-skeleton", infer.pose_skeleton, "Skeleton JSON")
                     ->check(CLI::ExistingFile);
  auto* o_map = c_infer->add_option("--pose-map", infer.pose_map, "Pose-map PNG")->check(CLI::ExistingFile);
  o_skel->excludes(o_map);
  c_infer->add_option("--mask-strategy", infer.strategy, "fine | bbox")->capture_default_str();
  c_infer->add_option("--seed", infer.seed, "Sampling seed")->required();
  c_infer->add_option("--out", infer.out, "Output PNG")->required();

  ShowConditioning show;
  auto* c_show = app.add_subcommand("show-conditioning", "Render the assembled model input as a PNG mosaic");
  c_show->add_option("--sample", show.sample, "Sample directory")->required()->check(CLI::ExistingDirectory);
  c_show->add_option("--mode", show.mode, modes_help)->required();
  c_show->add_option("--out", show.out, "Output PNG")->required();
  c_show->add_option("--mask-strategy", show.strategy, "fine | bbox")->capture_default_str();
  c_show->add_option("--t", show.t, "Diffusion step of the noisy block")->capture_default_str();
  c_show->add_option("--seed", show.seed, "Noise seed")->capture_default_str();

  Eval ev;
  auto* c_eval = app.add_subcommand("eval", "Score checkpoints on a dataset split");
  c_eval->add_option("--ckpt", ev.ckpts, "One checkpoint, or one per mode")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--modes", ev.modes, modes_help)->required();
  c_eval->add_option("--report", ev.report, "Report JSON path (a .csv is written beside it)")->required();
  c_eval->add_option("--mask-strategy", ev.strategy, "fine | bbox")->capture_default_str();
  c_eval->add_option("--split", ev.split, "train | test")->capture_default_str();
  c_eval->add_option("--limit", ev.limit, "Use at most N samples (0 = all)")->capture_default_str();
  c_eval->add_option("--seed", ev.seed, "Sampling seed base")->capture_default_str();
  c_eval->add_flag("--pose-transfer", ev.pose_transfer, "Condition on and score against the transfer targets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << code_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (c_gen->parsed()) return gen.run(out);
    if (c_train->parsed()) return train.run(out);
    if (c_infer->parsed()) return infer.run(out, err);
    if (c_show->parsed()) return show.run(out);
    if (c_eval->parsed()) return ev.run(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace stitchvton::cli
