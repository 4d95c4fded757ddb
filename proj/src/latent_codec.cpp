#include "stitchvton/latent_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stitchvton {
namespace {

using Basis = Eigen::Matrix<float, 2, kLatentPatch, Eigen::RowMajor>;
using Patch = Eigen::Matrix<float, kLatentPatch, kLatentPatch, Eigen::RowMajor>;

// Rows: orthonormal DCT-II basis vectors for frequencies 0 and 1.
const Basis& dct_basis() {
  static const Basis basis = [] {
    Basis b;
    for (int i = 0; i < kLatentPatch; ++i) {
      b(0, i) = std::sqrt(1.0f / kLatentPatch);
      b(1, i) = std::sqrt(2.0f / kLatentPatch) *
                static_cast<float>(std::cos(std::numbers::pi * (2 * i + 1) / (2.0 * kLatentPatch)));
    }
    return b;
  }();
  return basis;
}

// Unscaled (mean, F01, F10, F11) of one patch. F(u,v): u vertical, v horizontal.
std::array<float, kLatentChannels> patch_coefficients(const Patch& y) {
  const Eigen::Matrix2f f = dct_basis() * y * dct_basis().transpose();
  return {f(0, 0) / kLatentPatch, f(0, 1), f(1, 0), f(1, 1)};
}

}  // namespace

nlohmann::json CodecConfig::to_json() const { return {{"scales", scales}}; }

CodecConfig CodecConfig::from_json(const nlohmann::json& j) {
  CodecConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key != "scales") throw ContractError("codec: unknown key '" + key + "'");
  }
  cfg.scales = j.at("scales").get<std::array<float, kLatentChannels>>();
  for (float s : cfg.scales) {
    if (!(s > 0.0f) || !std::isfinite(s)) throw ContractError("codec: scales must be positive");
  }
  return cfg;
}

void require_latent_compatible(const char* op, int height, int width) {
  if (height <= 0 || width <= 0 || height % kLatentPatch != 0 || width % kLatentPatch != 0) {
    std::ostringstream os;
    os << op << ": " << height << "x" << width << " is not a positive multiple of " << kLatentPatch;
    throw ShapeError(os.str());
  }
}

Latent encode(const Image& img, const CodecConfig& cfg, LatentTag tag) {
  require_latent_compatible("encode", img.height(), img.width());
  const int h = img.height() / kLatentPatch, w = img.width() / kLatentPatch;
  const Plane luma = img.luma();
  std::vector<float> out(static_cast<std::size_t>(kLatentChannels) * h * w);
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      const Patch patch = luma.block<kLatentPatch, kLatentPatch>(py * kLatentPatch, px * kLatentPatch).matrix();
      const auto coeff = patch_coefficients(patch);
      for (int c = 0; c < kLatentChannels; ++c) {
        out[(static_cast<std::size_t>(c) * h + py) * w + px] = coeff[c] * cfg.scales[c];
      }
    }
  }
  return {Tensor({1, kLatentChannels, h, w}, std::move(out)), tag};
}

Plane decode_luma(const Latent& lat, const CodecConfig& cfg) {
  const Shape s = lat.values.shape();
  if (s.n != 1 || s.c != kLatentChannels) {
    throw ShapeError("decode: expected 1x4xHxW latent, got " + s.str());
  }
  const Basis& b = dct_basis();
  Plane out(s.h * kLatentPatch, s.w * kLatentPatch);
  for (int py = 0; py < s.h; ++py) {
    for (int px = 0; px < s.w; ++px) {
      Eigen::Matrix2f f;
      f(0, 0) = lat.values.at(0, 0, py, px) / cfg.scales[0] * kLatentPatch;
      f(0, 1) = lat.values.at(0, 1, py, px) / cfg.scales[1];
      f(1, 0) = lat.values.at(0, 2, py, px) / cfg.scales[2];
      f(1, 1) = lat.values.at(0, 3, py, px) / cfg.scales[3];
      out.block<kLatentPatch, kLatentPatch>(py * kLatentPatch, px * kLatentPatch) =
          (b.transpose() * f * b).array();
    }
  }
  return out;
}

Image decode(const Latent& lat, const CodecConfig& cfg) {
  const Plane y = decode_luma(lat, cfg).cwiseMax(0.0f).cwiseMin(1.0f);
  return Image(y, y, y);
}

LatentRange latent_range(const CodecConfig& cfg) {
  // Each coefficient is linear in the pixels, so its extremes put every pixel
  // at 0 or 1 according to the sign of its weight.
  LatentRange r{};
  for (int c = 0; c < kLatentChannels; ++c) {
    Patch unit = Patch::Zero();
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < kLatentPatch * kLatentPatch; ++i) {
      unit(i / kLatentPatch, i % kLatentPatch) = 1.0f;
      const float w = patch_coefficients(unit)[c];
      unit(i / kLatentPatch, i % kLatentPatch) = 0.0f;
      (w < 0 ? lo : hi) += w;
    }
    r.lo[c] = static_cast<float>(lo) * cfg.scales[c];
    r.hi[c] = static_cast<float>(hi) * cfg.scales[c];
  }
  return r;
}

Tensor clamp_to_range(const Tensor& latent, const CodecConfig& cfg) {
  const Shape s = latent.shape();
  if (s.c != kLatentChannels) throw ShapeError("clamp_to_range: expected 4 channels, got " + s.str());
  const LatentRange r = latent_range(cfg);
  Tensor::Storage v = latent.to_vector();
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int c = static_cast<int>((i / plane) % kLatentChannels);
    v[i] = std::clamp(v[i], r.lo[c], r.hi[c]);
  }
  return Tensor(s, std::move(v));
}

std::array<float, kLatentChannels> calibrate_codec_scales(std::span<const Image> images) {
  std::array<double, kLatentChannels> sq{};
  long count = 0;
  for (const Image& img : images) {
    require_latent_compatible("calibrate_codec_scales", img.height(), img.width());
    const Plane luma = img.luma();
    for (int py = 0; py < img.height() / kLatentPatch; ++py) {
      for (int px = 0; px < img.width() / kLatentPatch; ++px) {
        const Patch patch = luma.block<kLatentPatch, kLatentPatch>(py * kLatentPatch, px * kLatentPatch).matrix();
        const auto coeff = patch_coefficients(patch);
        for (int c = 0; c < kLatentChannels; ++c) sq[c] += static_cast<double>(coeff[c]) * coeff[c];
        ++count;
      }
    }
  }
  if (count == 0) throw ContractError("calibrate_codec_scales: no patches");
  std::array<float, kLatentChannels> scales{};
  for (int c = 0; c < kLatentChannels; ++c) {
    const double rms = std::sqrt(sq[c] / static_cast<double>(count));
    if (rms <= 0.0) throw NumericError("calibrate_codec_scales: channel " + std::to_string(c) + " is identically zero");
    scales[c] = static_cast<float>(1.0 / rms);
  }
  return scales;
}

}  // namespace stitchvton
