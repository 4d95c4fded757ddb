#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Core>

#include "stitchvton/image.hpp"
#include "stitchvton/latent_codec.hpp"

namespace stitchvton::metrics {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr float kSilhouetteLuma = 0.95f;

/// Mean local SSIM of the lumas over all fully contained 11x11 Gaussian
/// windows. Throws ShapeError on mismatched or too-small images.
double ssim(const Image& a, const Image& b);

/// Rows are samples, columns are feature dimensions.
using FeatureMatrix = Eigen::MatrixXd;
using FeatureExtractor = std::function<Eigen::VectorXd(const Image&)>;

/// Flattened latent encoding, 4 (H/8) (W/8) values.
FeatureExtractor codec_features(const CodecConfig& codec = {});
FeatureMatrix feature_matrix(std::span<const Image> images, const FeatureExtractor& extractor);

struct FidTerms {
  double mean_term = 0.0;   // |mu_r - mu_f|^2
  double trace_term = 0.0;  // Tr(S_r + S_f - 2 (S_r S_f)^(1/2))
  double value() const { return mean_term + trace_term; }
};

/// Frechet distance of the Gaussian fits. Throws ContractError for fewer
/// than two rows or mismatched dims, NumericError when the covariance
/// product has eigenvalues too negative to be rounding noise.
FidTerms fid_terms(const FeatureMatrix& real, const FeatureMatrix& fake);
double fid(const FeatureMatrix& real, const FeatureMatrix& fake);

/// Unbiased MMD^2 with kernel (x.y/d + 1)^3, averaged over `subsets` draws of
/// min(subset_size, n) rows. When both sets have the same row count the
/// same indices are drawn for both (rows are treated as pairs). Not scaled.
double kid(const FeatureMatrix& real, const FeatureMatrix& fake, std::uint64_t seed = 0, int subsets = 10,
           int subset_size = 100);

/// 1 where luma < 0.95 (anything that is not white background).
LabelPlane silhouette(const Image& img);

/// IoU of the generated and target silhouettes inside the editable region
/// of `keep`; 1 when both are empty there.
double pose_iou(const Image& generated, const LabelPlane& target_silhouette, const BinaryMask& keep);

}  // namespace stitchvton::metrics
