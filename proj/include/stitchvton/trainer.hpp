#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "stitchvton/adam.hpp"
#include "stitchvton/conditioning.hpp"
#include "stitchvton/denoiser.hpp"
#include "stitchvton/schedule.hpp"
#include "stitchvton/synth.hpp"

namespace stitchvton {

/// Latents for one (sample, mask) pairing, ready for assemble_input.
struct ConditionedLatents {
  Tensor x0;
  Tensor masked;  // encode(condition image); kept in the unconditional pass
  Tensor edit;    // 1 x 1 x h x w
  std::optional<Tensor> pose_side;
};

/// Everything training needs from a SpriteSample under one mode, so the
/// corpus is held as latents rather than images.
struct TrainingExample {
  Tensor garment;
  std::array<ConditionedLatents, 2> by_strategy;  // indexed by MaskStrategy
  std::optional<ConditionedLatents> transfer;     // bbox pairing toward the target pose
};

TrainingExample prepare_example(const synth::SpriteSample& sample, ConditioningMode mode, const CodecConfig& codec);

/// FineGrained with probability `fine_fraction`, else BoundingBox.
MaskStrategy draw_mask_strategy(std::mt19937_64& rng, double fine_fraction);

struct TrainOptions {
  int batch = 8;
  float lr = 5e-4f;
  double mask_mix = 0.5;      // fraction of fine-grained masks
  double cond_dropout = 0.1;  // probability of training the unconditional branch
  bool pose_transfer = false;
  std::uint64_t seed = 0;
};

struct StepReport {
  long step = 0;
  double loss = 0.0;
  int fine_count = 0;
  int dropped_count = 0;
};

class Trainer {
 public:
  Trainer(DenoiserNet net, NoiseSchedule schedule, ConditioningMode mode, std::vector<TrainingExample> data,
          TrainOptions options);

  /// One optimizer step over the next `batch` examples of a seeded epoch order.
  StepReport step();
  /// Runs `steps` steps; `on_step` sees every report.
  std::vector<double> run(int steps, const std::function<void(const StepReport&)>& on_step = {});

  const DenoiserNet& net() const { return net_; }
  ConditioningMode mode() const { return mode_; }

 private:
  struct Draw {
    int index;
    MaskStrategy strategy;
    bool dropped;
    int t;
    Tensor eps;
  };
  LatentBundle bundle_for(const Draw& d) const;
  int next_index();

  DenoiserNet net_;
  NoiseSchedule schedule_;
  ConditioningMode mode_;
  std::vector<TrainingExample> data_;
  TrainOptions options_;
  nn::AdamState adam_;
  std::mt19937_64 rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
};

}  // namespace stitchvton
