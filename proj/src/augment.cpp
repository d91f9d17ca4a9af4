#include "orthotail/augment.hpp"

#include "orthotail/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace orthotail {

void OurConfig::validate() const {
  require(std::isfinite(mu), ErrorCode::kConfigInvalid, "mu must be finite");
  require(mu >= 0.0, ErrorCode::kNegativeMu, "mu must be non-negative");
  require(tail_threshold_ratio > 0.0 && tail_threshold_ratio <= 1.0, ErrorCode::kConfigInvalid,
          "tail_threshold_ratio must lie in (0, 1]");
  require(start_epoch >= 2, ErrorCode::kConfigInvalid, "start_epoch must be >= 2");
}

TailMask select_tail_classes(std::span<const std::size_t> counts, double ratio) {
  require(!counts.empty(), ErrorCode::kEmptyCounts, "no class counts given");
  require(ratio > 0.0 && ratio <= 1.0, ErrorCode::kConfigInvalid, "ratio must lie in (0, 1]");
  const double threshold = ratio * static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  TailMask mask(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] >= 1, ErrorCode::kEmptyCounts, "class " + std::to_string(i) + " has no samples");
    mask[i] = static_cast<double>(counts[i]) < threshold;
  }
  return mask;
}

void perturb_columns(Matrix& features, std::span<const Eigen::Index> columns, const Vector& u, double lambda_mean,
                     double mu, Rng& rng) {
  require(u.size() == features.rows(), ErrorCode::kDimensionMismatch, "direction length differs from feature dim");
  require(mu >= 0.0, ErrorCode::kNegativeMu, "mu must be non-negative");
  if (mu == 0.0 || columns.empty()) return;
  const double scale = mu * lambda_mean;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Eigen::Index j : columns) {
    const double eps = normal(rng);
    features.col(j) += (scale * eps) * u;
  }
}

SampleMatrix our_transform(const SampleMatrix& tail_features, const Vector& u, double lambda_mean, double mu,
                           Rng& rng) {
  Matrix out = tail_features.data();
  std::vector<Eigen::Index> all(static_cast<std::size_t>(out.cols()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  perturb_columns(out, all, u, lambda_mean, mu, rng);
  return tail_features.has_labels() ? SampleMatrix(std::move(out), tail_features.labels())
                                    : SampleMatrix(std::move(out));
}

}  // namespace orthotail
