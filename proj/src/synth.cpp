#include "stitchvton/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <variant>

#include "stitchvton/checkpoint.hpp"
#include "stitchvton/io.hpp"
#include "stitchvton/mask_ops.hpp"
#include "stitchvton/parallel.hpp"

namespace stitchvton::synth {
namespace {

struct Vec2 {
  float x = 0.0f;
  float y = 0.0f;
};

struct Capsule {
  Vec2 a, b;
  float r;
};
struct Disc {
  Vec2 c;
  float r;
};
struct Rect {
  float x0, y0, x1, y1;
};
using Shape2 = std::variant<Capsule, Disc, Rect>;

struct Primitive {
  Shape2 shape;
  PosePart part;
  bool garment;
};

bool contains(const Shape2& s, float px, float py) {
  if (const auto* c = std::get_if<Capsule>(&s)) {
    const float dx = c->b.x - c->a.x, dy = c->b.y - c->a.y;
    const float len2 = dx * dx + dy * dy;
    float t = len2 > 0 ? ((px - c->a.x) * dx + (py - c->a.y) * dy) / len2 : 0.0f;
    t = std::clamp(t, 0.0f, 1.0f);
    const float ex = c->a.x + t * dx - px, ey = c->a.y + t * dy - py;
    return ex * ex + ey * ey <= c->r * c->r;
  }
  if (const auto* d = std::get_if<Disc>(&s)) {
    const float ex = d->c.x - px, ey = d->c.y - py;
    return ex * ex + ey * ey <= d->r * d->r;
  }
  const auto& r = std::get<Rect>(s);
  return px >= r.x0 && px <= r.x1 && py >= r.y0 && py <= r.y1;
}

// Axis-aligned extent of a primitive.
Rect extent(const Shape2& s) {
  if (const auto* c = std::get_if<Capsule>(&s)) {
    return {std::min(c->a.x, c->b.x) - c->r, std::min(c->a.y, c->b.y) - c->r, std::max(c->a.x, c->b.x) + c->r,
            std::max(c->a.y, c->b.y) + c->r};
  }
  if (const auto* d = std::get_if<Disc>(&s)) return {d->c.x - d->r, d->c.y - d->r, d->c.x + d->r, d->c.y + d->r};
  return std::get<Rect>(s);
}

// side = -1 for the figure's right (image left), +1 for its left.
Vec2 limb_dir(float angle, float side) { return {side * std::sin(angle), std::cos(angle)}; }

Vec2 along(Vec2 p, Vec2 d, float len) { return {p.x + d.x * len, p.y + d.y * len}; }

struct Skeleton2 {
  Vec2 head, neck;
  std::array<Vec2, 2> shoulder, elbow, wrist, hip, knee, ankle;  // [0] right, [1] left
};

Skeleton2 joints_of(const ArticulatedFigure& f) {
  Skeleton2 s;
  s.neck = {f.anchor_x, f.anchor_y};
  s.head = {f.anchor_x, f.anchor_y - f.head_radius + 1.0f};
  for (int k = 0; k < 2; ++k) {
    const float side = k == 0 ? -1.0f : 1.0f;
    const int sh = k == 0 ? RShoulder : LShoulder, el = k == 0 ? RElbow : LElbow;
    const int hp = k == 0 ? RHip : LHip, kn = k == 0 ? RKnee : LKnee;
    s.shoulder[k] = {f.anchor_x + side * f.torso_width / 2, f.anchor_y + f.arm_radius};
    s.elbow[k] = along(s.shoulder[k], limb_dir(f.angles[sh], side), f.upper_arm);
    s.wrist[k] = along(s.elbow[k], limb_dir(f.angles[sh] + f.angles[el], side), f.lower_arm);
    s.hip[k] = {f.anchor_x + side * (f.torso_width / 2 - f.leg_radius), f.anchor_y + f.torso_length};
    s.knee[k] = along(s.hip[k], limb_dir(f.angles[hp], side), f.upper_leg);
    s.ankle[k] = along(s.knee[k], limb_dir(f.angles[hp] + f.angles[kn], side), f.lower_leg);
  }
  return s;
}

bool covers(GarmentClass cls, PosePart part, bool lower_segment) {
  switch (cls) {
    case GarmentClass::Upper:
      return part == PosePart::Torso || part == PosePart::RightUpperArm || part == PosePart::LeftUpperArm;
    case GarmentClass::Lower:
      return part == PosePart::RightLeg || part == PosePart::LeftLeg;
    case GarmentClass::Dress:
      return part == PosePart::Torso || ((part == PosePart::RightLeg || part == PosePart::LeftLeg) && !lower_segment);
  }
  return false;
}

// Painter order: legs, torso, head, arms.
std::vector<Primitive> primitives_of(const ArticulatedFigure& f, GarmentClass cls) {
  const Skeleton2 s = joints_of(f);
  std::vector<Primitive> out;
  const std::array<PosePart, 2> legs = {PosePart::RightLeg, PosePart::LeftLeg};
  for (int k = 0; k < 2; ++k) {
    out.push_back({Capsule{s.hip[k], s.knee[k], f.leg_radius}, legs[k], covers(cls, legs[k], false)});
    out.push_back({Capsule{s.knee[k], s.ankle[k], f.leg_radius}, legs[k], covers(cls, legs[k], true)});
  }
  out.push_back({Rect{f.anchor_x - f.torso_width / 2, f.anchor_y, f.anchor_x + f.torso_width / 2,
                      f.anchor_y + f.torso_length},
                 PosePart::Torso, covers(cls, PosePart::Torso, false)});
  out.push_back({Disc{s.head, f.head_radius}, PosePart::Head, false});
  const std::array<PosePart, 2> upper = {PosePart::RightUpperArm, PosePart::LeftUpperArm};
  const std::array<PosePart, 2> lower = {PosePart::RightLowerArm, PosePart::LeftLowerArm};
  for (int k = 0; k < 2; ++k) {
    out.push_back({Capsule{s.shoulder[k], s.elbow[k], f.arm_radius}, upper[k], covers(cls, upper[k], false)});
    out.push_back({Capsule{s.elbow[k], s.wrist[k], f.arm_radius}, lower[k], covers(cls, lower[k], false)});
  }
  return out;
}

Rect bounds_of(const std::vector<Primitive>& prims) {
  Rect b{1e9f, 1e9f, -1e9f, -1e9f};
  for (const auto& p : prims) {
    const Rect e = extent(p.shape);
    b = {std::min(b.x0, e.x0), std::min(b.y0, e.y0), std::max(b.x1, e.x1), std::max(b.y1, e.y1)};
  }
  return b;
}

Rgb garment_color(const GarmentSpec& g, int y, int x) {
  const int s = std::max(1, g.pattern_scale);
  switch (g.pattern) {
    case Pattern::Solid:
      return g.base;
    case Pattern::Stripes:
      return (y / s) % 2 == 0 ? g.base : g.secondary();
    case Pattern::Checker:
      return (y / s + x / s) % 2 == 0 ? g.base : g.secondary();
  }
  return g.base;
}

float luma_of(const Rgb& c) { return 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2]; }

constexpr float kMargin = 1.0f;
constexpr int kMaxAnchorAttempts = 10;

float uniform(std::mt19937_64& rng, float lo, float hi) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

bool distinct(const GarmentSpec& a, const GarmentSpec& b) {
  if (a.pattern != b.pattern) return true;
  float diff = 0.0f;
  for (int k = 0; k < 3; ++k) diff = std::max(diff, std::abs(a.base[k] - b.base[k]));
  return diff > 0.2f;
}

std::string sample_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%06d", i);
  return buf;
}

constexpr int kMaxPoseDraws = 10;

}  // namespace

Rgb GarmentSpec::secondary() const { return {base[0] * 0.5f, base[1] * 0.5f, base[2] * 0.5f}; }

ArticulatedFigure ArticulatedFigure::neutral(int height, int width) {
  const float s = static_cast<float>(height) / 64.0f;
  ArticulatedFigure f;
  f.torso_length = 18.0f * s;
  f.torso_width = 14.0f * s;
  f.head_radius = 5.0f * s;
  f.upper_arm = 9.0f * s;
  f.lower_arm = 9.0f * s;
  f.upper_leg = 11.0f * s;
  f.lower_leg = 11.0f * s;
  f.arm_radius = 2.0f * s;
  f.leg_radius = 2.5f * s;
  f.anchor_x = static_cast<float>(width) / 2.0f;
  f.anchor_y = std::round(14.0f * s);
  return f;
}

FigureRender render_figure(const ArticulatedFigure& fig_in, const GarmentSpec& garment, int height, int width) {
  for (float a : fig_in.angles) {
    if (!(std::abs(a) <= kMaxAngle)) throw ContractError("render_figure: joint angle outside [-2, 2] rad");
  }
  ArticulatedFigure fig = fig_in;
  bool fits = false;
  for (int attempt = 0; attempt < kMaxAnchorAttempts && !fits; ++attempt) {
    const Rect b = bounds_of(primitives_of(fig, garment.garment_class));
    float dx = 0.0f, dy = 0.0f;
    if (b.x0 < kMargin) dx = kMargin - b.x0;
    else if (b.x1 > width - kMargin) dx = (width - kMargin) - b.x1;
    if (b.y0 < kMargin) dy = kMargin - b.y0;
    else if (b.y1 > height - kMargin) dy = (height - kMargin) - b.y1;
    if (dx == 0.0f && dy == 0.0f) {
      fits = true;
    } else {
      fig.anchor_x = std::round(fig.anchor_x + dx);
      fig.anchor_y = std::round(fig.anchor_y + dy);
    }
  }
  if (!fits) throw ContractError("render_figure: figure does not fit the canvas after re-anchoring");

  const auto prims = primitives_of(fig, garment.garment_class);
  FigureRender out{Image::filled(height, width, {1.0f, 1.0f, 1.0f}),
                   PoseMap{LabelPlane::Zero(height, width)},
                   SkeletonPose::empty(),
                   LabelPlane::Zero(height, width),
                   LabelPlane::Zero(height, width),
                   LabelPlane::Zero(height, width),
                   fig};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Primitive* top = nullptr;
      for (const auto& p : prims) {
        if (contains(p.shape, x + 0.5f, y + 0.5f)) top = &p;
      }
      if (!top) continue;
      out.silhouette(y, x) = 1;
      out.pose_map.labels(y, x) = static_cast<std::uint8_t>(top->part);
      out.garment_region(y, x) = top->garment ? 1 : 0;
      out.head_region(y, x) = top->part == PosePart::Head ? 1 : 0;
      out.image.set_pixel(y, x, top->garment ? garment_color(garment, y, x) : fig.skin);
    }
  }

  const Skeleton2 s = joints_of(fig);
  auto put = [&](JointId id, Vec2 p) {
    auto& j = out.skeleton[id];
    // Pixel-index coordinates: continuous point p lies in pixel floor(p).
    j.x = std::clamp(p.x - 0.5f, 0.0f, static_cast<float>(width - 1));
    j.y = std::clamp(p.y - 0.5f, 0.0f, static_cast<float>(height - 1));
    j.visible = true;
  };
  put(JointId::Nose, s.head);
  put(JointId::Neck, {s.neck.x, s.neck.y + 1.0f});
  put(JointId::RShoulder, s.shoulder[0]);
  put(JointId::RElbow, s.elbow[0]);
  put(JointId::RWrist, s.wrist[0]);
  put(JointId::LShoulder, s.shoulder[1]);
  put(JointId::LElbow, s.elbow[1]);
  put(JointId::LWrist, s.wrist[1]);
  put(JointId::RHip, s.hip[0]);
  put(JointId::RKnee, s.knee[0]);
  put(JointId::RAnkle, s.ankle[0]);
  put(JointId::LHip, s.hip[1]);
  put(JointId::LKnee, s.knee[1]);
  put(JointId::LAnkle, s.ankle[1]);
  return out;
}

Image render_garment_flat(const GarmentSpec& garment, const ArticulatedFigure& fig_in, int height, int width) {
  ArticulatedFigure fig = fig_in;
  fig.angles = {0.6f, 0.6f, 0.0f, 0.0f, 0.2f, 0.2f, 0.0f, 0.0f};
  std::vector<Primitive> prims;
  for (const auto& p : primitives_of(fig, garment.garment_class)) {
    if (p.garment) prims.push_back(p);
  }
  const Rect b = bounds_of(prims);
  const float dx = width / 2.0f - (b.x0 + b.x1) / 2.0f;
  const float dy = height / 2.0f - (b.y0 + b.y1) / 2.0f;
  fig.anchor_x += dx;
  fig.anchor_y += dy;
  prims.clear();
  for (const auto& p : primitives_of(fig, garment.garment_class)) {
    if (p.garment) prims.push_back(p);
  }
  Image img = Image::filled(height, width, {1.0f, 1.0f, 1.0f});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (const auto& p : prims) {
        if (contains(p.shape, x + 0.5f, y + 0.5f)) {
          img.set_pixel(y, x, garment_color(garment, y, x));
          break;
        }
      }
    }
  }
  return img;
}

BinaryMask fine_mask_for(const FigureRender& render) {
  const LabelPlane edit = dilate_region(render.garment_region, kMaskDilation);
  const LabelPlane keep = (edit == 0 || render.head_region != 0).cast<std::uint8_t>();
  return BinaryMask(keep);
}

GarmentSpec sample_garment(std::mt19937_64& rng, GarmentClass cls) {
  GarmentSpec g;
  g.garment_class = cls;
  do {
    g.base = {uniform(rng, 0.0f, 1.0f), uniform(rng, 0.0f, 1.0f), uniform(rng, 0.0f, 1.0f)};
  } while (luma_of(g.base) < 0.08f || luma_of(g.base) > 0.8f);
  g.pattern = static_cast<Pattern>(std::uniform_int_distribution<int>(0, 2)(rng));
  g.pattern_scale = std::uniform_int_distribution<int>(2, 5)(rng);
  return g;
}

void sample_angles(std::mt19937_64& rng, ArticulatedFigure& fig) {
  fig.angles[RShoulder] = uniform(rng, -0.3f, 1.9f);
  fig.angles[LShoulder] = uniform(rng, -0.3f, 1.9f);
  fig.angles[RElbow] = uniform(rng, -1.2f, 1.2f);
  fig.angles[LElbow] = uniform(rng, -1.2f, 1.2f);
  fig.angles[RHip] = uniform(rng, -0.15f, 0.5f);
  fig.angles[LHip] = uniform(rng, -0.15f, 0.5f);
  fig.angles[RKnee] = uniform(rng, -0.6f, 0.6f);
  fig.angles[LKnee] = uniform(rng, -0.6f, 0.6f);
}

ArticulatedFigure sample_figure(std::mt19937_64& rng, int size) {
  static const std::array<Rgb, 4> skins = {{
      {0.95f, 0.80f, 0.69f}, {0.87f, 0.72f, 0.60f}, {0.78f, 0.57f, 0.44f}, {0.55f, 0.38f, 0.28f}}};
  ArticulatedFigure f = ArticulatedFigure::neutral(size, size);
  for (float* len : {&f.torso_length, &f.torso_width, &f.upper_arm, &f.lower_arm, &f.upper_leg, &f.lower_leg}) {
    *len *= uniform(rng, 0.9f, 1.1f);
  }
  f.anchor_x = std::round(f.anchor_x + uniform(rng, -3.0f, 3.0f) * size / 64.0f);
  f.skin = skins[std::uniform_int_distribution<int>(0, 3)(rng)];
  sample_angles(rng, f);
  return f;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

namespace {

// Poses too tall for the canvas are redrawn; the last failure propagates.
FigureRender render_posed(std::mt19937_64& rng, ArticulatedFigure& fig, const GarmentSpec& g, int size) {
  for (int attempt = 1;; ++attempt) {
    try {
      return render_figure(fig, g, size, size);
    } catch (const ContractError&) {
      if (attempt == kMaxPoseDraws) throw;
      sample_angles(rng, fig);
    }
  }
}

}  // namespace

SpriteSample make_sample(std::mt19937_64& rng, bool pose_transfer, int size) {
  if (size <= 0 || size % kLatentPatch != 0) throw ShapeError("make_sample: size must be a positive multiple of 8");
  ArticulatedFigure fig = sample_figure(rng, size);
  const auto cls = static_cast<GarmentClass>(std::uniform_int_distribution<int>(0, 2)(rng));
  const GarmentSpec a = sample_garment(rng, cls);
  GarmentSpec b = sample_garment(rng, cls);
  while (!distinct(a, b)) b = sample_garment(rng, cls);

  const FigureRender person = render_posed(rng, fig, a, size);
  const FigureRender truth = render_figure(person.figure, b, size, size);

  SpriteSample s;
  s.person = person.image;
  s.garment = render_garment_flat(b, fig, size, size);
  s.pose_map = person.pose_map;
  s.skeleton = person.skeleton;
  s.fine = fine_mask_for(truth);
  s.bbox = derive_bbox_mask(s.fine);
  s.truth = truth.image;
  if (pose_transfer) {
    ArticulatedFigure moved = person.figure;
    sample_angles(rng, moved);
    const FigureRender target = render_posed(rng, moved, b, size);
    s.target = PoseTransferTarget{target.skeleton, target.pose_map, target.image, fine_mask_for(target)};
  }
  return s;
}

int train_count(int n, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ContractError("train fraction outside [0,1]");
  return static_cast<int>(std::lround(n * train_fraction));
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : samples) {
    entries.push_back({{"id", e.id}, {"path", e.path}, {"split", e.split}, {"has_target", e.has_target}});
  }
  return {{"schema", schema},         {"seed", seed},
          {"image_size", image_size}, {"pose_transfer", pose_transfer},
          {"train_fraction", train_fraction}, {"samples", entries}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  m.schema = j.at("schema").get<int>();
  if (m.schema != 1) throw IoError("manifest: unsupported schema " + std::to_string(m.schema));
  m.seed = j.at("seed").get<std::uint64_t>();
  m.image_size = j.at("image_size").get<int>();
  m.pose_transfer = j.at("pose_transfer").get<bool>();
  m.train_fraction = j.at("train_fraction").get<double>();
  for (const auto& e : j.at("samples")) {
    m.samples.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>(),
                         e.at("split").get<std::string>(), e.value("has_target", false)});
  }
  return m;
}

std::vector<const ManifestEntry*> Manifest::split(const std::string& name) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : samples) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

void save_sample(const std::filesystem::path& dir, const SpriteSample& s) {
  std::filesystem::create_directories(dir);
  save_png(dir / "person.png", s.person);
  save_png(dir / "garment.png", s.garment);
  save_pose_map_png(dir / "posemap.png", s.pose_map);
  save_skeleton(dir / "skeleton.json", s.skeleton);
  save_mask_png(dir / "mask_fine.png", s.fine);
  save_mask_png(dir / "mask_bbox.png", s.bbox);
  save_png(dir / "truth.png", s.truth);
  if (s.target) {
    save_skeleton(dir / "target_skeleton.json", s.target->skeleton);
    save_pose_map_png(dir / "target_posemap.png", s.target->pose_map);
    save_png(dir / "target_truth.png", s.target->truth);
    save_mask_png(dir / "target_mask_fine.png", s.target->fine);
  }
}

SpriteSample load_sample(const std::filesystem::path& dir) {
  SpriteSample s;
  s.person = load_png(dir / "person.png");
  s.garment = load_png(dir / "garment.png");
  s.pose_map = load_pose_map_png(dir / "posemap.png");
  s.skeleton = load_skeleton(dir / "skeleton.json");
  s.fine = load_mask_png(dir / "mask_fine.png");
  s.bbox = load_mask_png(dir / "mask_bbox.png");
  s.truth = load_png(dir / "truth.png");
  if (std::filesystem::exists(dir / "target_truth.png")) {
    s.target = PoseTransferTarget{load_skeleton(dir / "target_skeleton.json"),
                                  load_pose_map_png(dir / "target_posemap.png"), load_png(dir / "target_truth.png"),
                                  load_mask_png(dir / "target_mask_fine.png")};
  }
  return s;
}

std::vector<std::string> assign_splits(int n, std::uint64_t seed, double train_fraction) {
  const int n_train = train_count(n, train_fraction);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 split_rng = sample_rng(seed, ~std::uint64_t{0});
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<std::string> split(n, "test");
  for (int k = 0; k < n_train; ++k) split[order[k]] = "train";
  return split;
}

Manifest generate_dataset(int n, std::uint64_t seed, const std::filesystem::path& out_dir, double train_fraction,
                          bool pose_transfer, int size) {
  if (n < 0) throw ContractError("generate_dataset: n must be >= 0");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.seed = seed;
  m.image_size = size;
  m.pose_transfer = pose_transfer;
  m.train_fraction = train_fraction;

  const std::vector<std::string> split = assign_splits(n, seed, train_fraction);

  for (int i = 0; i < n; ++i) m.samples.push_back({sample_id(i), sample_id(i), split[i], pose_transfer});
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    auto rng = sample_rng(seed, i);
    save_sample(out_dir / sample_id(static_cast<int>(i)), make_sample(rng, pose_transfer, size));
  });

  const std::string text = m.to_json().dump(1);
  write_file_bytes(out_dir / "manifest.json", std::vector<std::uint8_t>(text.begin(), text.end()));
  return m;
}

Manifest load_manifest(const std::filesystem::path& dir) {
  const auto bytes = read_file_bytes(dir / "manifest.json");
  try {
    return Manifest::from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace stitchvton::synth
