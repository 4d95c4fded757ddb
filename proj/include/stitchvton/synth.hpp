#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stitchvton/image.hpp"
#include "stitchvton/pose.hpp"

namespace stitchvton::synth {

enum class GarmentClass { Upper, Lower, Dress };
enum class Pattern { Solid, Stripes, Checker };

struct GarmentSpec {
  GarmentClass garment_class = GarmentClass::Upper;
  Rgb base{0.2f, 0.3f, 0.6f};
  Pattern pattern = Pattern::Solid;
  int pattern_scale = 3;

  /// Second pattern color: the base darkened by half.
  Rgb secondary() const;
  bool operator==(const GarmentSpec&) const = default;
};

/// Joint-angle indices into ArticulatedFigure::angles. Angles are measured
/// from straight down, positive = away from the body midline; elbows and
/// knees are relative to the parent segment.
enum Angle : int { RShoulder = 0, LShoulder, RElbow, LElbow, RHip, LHip, RKnee, LKnee };

inline constexpr float kMaxAngle = 2.0f;

struct ArticulatedFigure {
  std::array<float, 8> angles{};
  float torso_length = 18.0f;
  float torso_width = 14.0f;
  float head_radius = 5.0f;
  float upper_arm = 9.0f;
  float lower_arm = 9.0f;
  float upper_leg = 11.0f;
  float lower_leg = 11.0f;
  float arm_radius = 2.0f;
  float leg_radius = 2.5f;
  /// Neck position in continuous pixel coordinates.
  float anchor_x = 32.0f;
  float anchor_y = 14.0f;
  Rgb skin{0.87f, 0.72f, 0.60f};

  /// Default proportions for an image of the given height, anchored at the
  /// horizontal center.
  static ArticulatedFigure neutral(int height, int width);
};

struct FigureRender {
  Image image;
  PoseMap pose_map;
  SkeletonPose skeleton;
  LabelPlane silhouette;      // 1 = figure
  LabelPlane garment_region;  // 1 = garment pixel
  LabelPlane head_region;     // 1 = head pixel
  ArticulatedFigure figure;   // after any re-anchoring
};

/// White background, capsule limbs, disc head, garment painted over its body
/// region. Figures that leave the canvas are re-anchored; throws
/// ContractError after 10 failed attempts or for angles outside [-2, 2].
FigureRender render_figure(const ArticulatedFigure& fig, const GarmentSpec& garment, int height, int width);

/// Garment alone in a display pose, centered on white.
Image render_garment_flat(const GarmentSpec& garment, const ArticulatedFigure& fig, int height, int width);

/// Editable = garment region dilated by a 5-px disc, minus the head.
BinaryMask fine_mask_for(const FigureRender& render);

inline constexpr int kMaskDilation = 5;

struct PoseTransferTarget {
  SkeletonPose skeleton;
  PoseMap pose_map;
  Image truth;
  BinaryMask fine;
};

struct SpriteSample {
  Image person;
  Image garment;
  PoseMap pose_map;
  SkeletonPose skeleton;
  BinaryMask fine;
  BinaryMask bbox;
  Image truth;
  std::optional<PoseTransferTarget> target;
};

/// Person wears garment A; the ground truth is the same figure wearing B;
/// the flat-lay shows B. With pose_transfer, B is also rendered in an
/// independently sampled pose with the same body and garment.
SpriteSample make_sample(std::mt19937_64& rng, bool pose_transfer, int size = 64);

/// Per-index generator seeded by splitting (seed, index); independent of
/// generation order.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index);

GarmentSpec sample_garment(std::mt19937_64& rng, GarmentClass cls);
ArticulatedFigure sample_figure(std::mt19937_64& rng, int size);
/// Redraws the eight joint angles only.
void sample_angles(std::mt19937_64& rng, ArticulatedFigure& fig);

struct ManifestEntry {
  std::string id;
  std::string path;
  std::string split;  // "train" | "test"
  bool has_target = false;
};

struct Manifest {
  int schema = 1;
  std::uint64_t seed = 0;
  int image_size = 64;
  bool pose_transfer = false;
  double train_fraction = 0.9;
  std::vector<ManifestEntry> samples;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
  std::vector<const ManifestEntry*> split(const std::string& name) const;
};

/// Number of training entries for n samples: round(n * train_fraction).
int train_count(int n, double train_fraction);

/// Split labels ("train" | "test") for n samples: a seeded permutation whose
/// first train_count(n, train_fraction) indices are "train".
std::vector<std::string> assign_splits(int n, std::uint64_t seed, double train_fraction);

/// Writes sample_%06d/ directories plus manifest.json; deterministic in seed.
Manifest generate_dataset(int n, std::uint64_t seed, const std::filesystem::path& out_dir,
                          double train_fraction = 0.9, bool pose_transfer = false, int size = 64);

Manifest load_manifest(const std::filesystem::path& dir);
SpriteSample load_sample(const std::filesystem::path& sample_dir);
void save_sample(const std::filesystem::path& sample_dir, const SpriteSample& sample);

}  // namespace stitchvton::synth
