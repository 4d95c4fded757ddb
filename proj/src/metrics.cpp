#include "stitchvton/metrics.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "stitchvton/errors.hpp"

namespace stitchvton::metrics {
namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd gaussian_kernel() {
  VectorXd k(kSsimWindow);
  const int r = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) k(i) = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
  return k / k.sum();
}

// Separable "valid" filtering with the Gaussian window.
ArrayXXd filter_valid(const ArrayXXd& x, const VectorXd& k) {
  const Eigen::Index n = k.size();
  const Eigen::Index oh = x.rows() - n + 1, ow = x.cols() - n + 1;
  ArrayXXd rows(oh, x.cols());
  for (Eigen::Index i = 0; i < oh; ++i) rows.row(i) = (k.transpose() * x.matrix().middleRows(i, n)).array();
  ArrayXXd out(oh, ow);
  for (Eigen::Index j = 0; j < ow; ++j) out.col(j) = (rows.matrix().middleCols(j, n) * k).array();
  return out;
}

void require_features(const FeatureMatrix& real, const FeatureMatrix& fake, const char* op) {
  if (real.rows() < 2 || fake.rows() < 2) throw ContractError(std::string(op) + ": need at least 2 samples per set");
  if (real.cols() != fake.cols() || real.cols() == 0) {
    throw ContractError(std::string(op) + ": feature dimensions differ");
  }
  if (!real.allFinite() || !fake.allFinite()) throw NumericError(std::string(op) + ": non-finite features");
}

MatrixXd covariance(const FeatureMatrix& x, const VectorXd& mu) {
  const MatrixXd c = x.rowwise() - mu.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

// Symmetric PSD square root, clamping rounding-level negative eigenvalues.
MatrixXd psd_sqrt(const MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericError(std::string("fid: eigendecomposition failed for ") + what);
  VectorXd ev = es.eigenvalues();
  const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol) throw NumericError(std::string("fid: ") + what + " is not positive semidefinite");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double mmd_unbiased(const FeatureMatrix& x, const FeatureMatrix& y) {
  const double d = static_cast<double>(x.cols());
  const auto kernel = [d](const MatrixXd& a, const MatrixXd& b) {
    return ((a * b.transpose()).array() / d + 1.0).cube().matrix().eval();
  };
  const Eigen::Index m = x.rows();
  const MatrixXd kxx = kernel(x, x), kyy = kernel(y, y), kxy = kernel(x, y);
  const double off = static_cast<double>(m) * (m - 1);
  const double sxx = kxx.sum() - kxx.trace();
  const double syy = kyy.sum() - kyy.trace();
  const double sxy = kxy.sum() - kxy.trace();
  return (sxx + syy - 2.0 * sxy) / off;
}

FeatureMatrix take_rows(const FeatureMatrix& x, const std::vector<int>& idx) {
  FeatureMatrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = x.row(idx[i]);
  return out;
}

std::vector<int> draw_subset(int n, int m, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(m);
  return idx;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_size("ssim", a.height(), a.width(), b.height(), b.width());
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw ShapeError("ssim: images smaller than the 11x11 window");
  }
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const ArrayXXd x = a.luma().cast<double>(), y = b.luma().cast<double>();
  const VectorXd k = gaussian_kernel();
  const ArrayXXd mx = filter_valid(x, k), my = filter_valid(y, k);
  const ArrayXXd sxx = filter_valid(x * x, k) - mx * mx;
  const ArrayXXd syy = filter_valid(y * y, k) - my * my;
  const ArrayXXd sxy = filter_valid(x * y, k) - mx * my;
  const ArrayXXd map = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

FeatureExtractor codec_features(const CodecConfig& codec) {
  return [codec](const Image& img) {
    const Tensor t = encode(img, codec).values;
    const auto d = t.data();
    VectorXd v(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) v(i) = d[i];
    return v;
  };
}

FeatureMatrix feature_matrix(std::span<const Image> images, const FeatureExtractor& extractor) {
  FeatureMatrix out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const VectorXd v = extractor(images[i]);
    if (i == 0) out.resize(images.size(), v.size());
    if (v.size() != out.cols()) throw ContractError("feature_matrix: extractor output length changed");
    out.row(i) = v.transpose();
  }
  return out;
}

FidTerms fid_terms(const FeatureMatrix& real, const FeatureMatrix& fake) {
  require_features(real, fake, "fid");
  const VectorXd mr = real.colwise().mean(), mf = fake.colwise().mean();
  const MatrixXd sr = covariance(real, mr), sf = covariance(fake, mf);
  // Tr((Sr Sf)^(1/2)) = Tr((Sr^(1/2) Sf Sr^(1/2))^(1/2)), whose argument is symmetric.
  const MatrixXd root_r = psd_sqrt(sr, "real covariance");
  const MatrixXd prod = root_r * sf * root_r;
  const MatrixXd sym = 0.5 * (prod + prod.transpose());
  FidTerms out;
  out.mean_term = (mr - mf).squaredNorm();
  out.trace_term = sr.trace() + sf.trace() - 2.0 * psd_sqrt(sym, "covariance product").trace();
  // The trace term is a squared distance; tiny negatives are rounding.
  out.trace_term = std::max(0.0, out.trace_term);
  return out;
}

double fid(const FeatureMatrix& real, const FeatureMatrix& fake) { return fid_terms(real, fake).value(); }

double kid(const FeatureMatrix& real, const FeatureMatrix& fake, std::uint64_t seed, int subsets, int subset_size) {
  require_features(real, fake, "kid");
  if (subsets <= 0 || subset_size < 2) throw ContractError("kid: need subsets > 0 and subset_size >= 2");
  const int n_real = static_cast<int>(real.rows()), n_fake = static_cast<int>(fake.rows());
  const int m = std::min({subset_size, n_real, n_fake});
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (int s = 0; s < subsets; ++s) {
    const std::vector<int> ir = draw_subset(n_real, m, rng);
    const std::vector<int> jf = n_real == n_fake ? ir : draw_subset(n_fake, m, rng);
    total += mmd_unbiased(take_rows(real, ir), take_rows(fake, jf));
  }
  return total / subsets;
}

LabelPlane silhouette(const Image& img) { return (img.luma() < kSilhouetteLuma).cast<std::uint8_t>(); }

double pose_iou(const Image& generated, const LabelPlane& target_silhouette, const BinaryMask& keep) {
  require_same_size("pose_iou", generated.height(), generated.width(), static_cast<int>(target_silhouette.rows()),
                    static_cast<int>(target_silhouette.cols()));
  require_same_size("pose_iou", generated.height(), generated.width(), keep.height(), keep.width());
  const auto edit = keep.values() == 0;
  const auto gen = silhouette(generated) != 0;
  const auto tgt = target_silhouette != 0;
  const long inter = (edit && gen && tgt).count();
  const long uni = (edit && (gen || tgt)).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace stitchvton::metrics
