#include "orthotail/manifold.hpp"

#include "orthotail/error.hpp"

#include <cmath>

namespace orthotail {

SampleMatrix::SampleMatrix(Matrix data) : data_(std::move(data)) {
  require(data_.cols() >= 1 && data_.rows() >= 1, ErrorCode::kEmptyMatrix, "sample matrix has no columns");
  require(data_.allFinite(), ErrorCode::kNonFinite, "sample matrix contains NaN or Inf");
}

SampleMatrix::SampleMatrix(Matrix data, std::vector<Label> labels) : SampleMatrix(std::move(data)) {
  require(labels.size() == static_cast<std::size_t>(data_.cols()), ErrorCode::kLengthMismatch,
          "label count differs from column count");
  labels_ = std::move(labels);
}

SampleMatrix SampleMatrix::select(std::span<const Eigen::Index> columns) const {
  Matrix out(dim(), static_cast<Eigen::Index>(columns.size()));
  std::vector<Label> labels;
  if (has_labels()) labels.reserve(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = data_.col(columns[k]);
    if (has_labels()) labels.push_back(labels_[static_cast<std::size_t>(columns[k])]);
  }
  return labels.empty() ? SampleMatrix(std::move(out)) : SampleMatrix(std::move(out), std::move(labels));
}

std::vector<double> default_fractions() { return {0.0, 0.01, 0.02, 0.03, 0.04, 0.05}; }

Vector centroid(const SampleMatrix& x) {
  require(x.count() >= 1, ErrorCode::kEmptyMatrix, "centroid of empty matrix");
  return x.data().rowwise().mean();
}

SymMatrix manifold_covariance(const SampleMatrix& x, bool centered) {
  const double n = static_cast<double>(x.count());
  if (centered) {
    const Matrix y = x.data().colwise() - centroid(x);
    return SymMatrix(gram(y) / n);
  }
  return SymMatrix(gram(x.data()) / n);
}

OrthoDirection direction_from_covariance(const SymMatrix& cov, Vector c) {
  const EigenDecomposition eig = sym_eig(cov);
  const SmallestEigenpair smallest = smallest_eigvec(eig);
  OrthoDirection dir;
  dir.u = smallest.vector;
  dir.lambda_min = smallest.value;
  dir.lambda_max = eig.values(0);
  dir.lambda_mean = top_k_mean_eigval(eig, kLambdaMeanTopK);
  dir.centroid = std::move(c);
  return dir;
}

OrthoDirection orthogonal_direction(const SampleMatrix& x, bool centered) {
  require(x.count() >= 2, ErrorCode::kTooFewSamples, "orthogonal direction needs at least two samples");
  require(x.dim() >= 2, ErrorCode::kDimensionMismatch, "orthogonal direction needs dimension >= 2");
  return direction_from_covariance(manifold_covariance(x, centered), centroid(x));
}

SampleMatrix shift_manifold(const SampleMatrix& x, const Vector& u, double distance) {
  require(u.size() == x.dim(), ErrorCode::kDimensionMismatch, "direction length differs from point dimension");
  require(distance >= 0.0, ErrorCode::kNegativeDistance, "shift distance must be non-negative");
  if (distance == 0.0) return x;
  Matrix shifted = x.data().colwise() + distance * u;
  return x.has_labels() ? SampleMatrix(std::move(shifted), x.labels()) : SampleMatrix(std::move(shifted));
}

DistanceSchedule build_schedule(const OrthoDirection& dir, std::span<const double> fractions) {
  DistanceSchedule s;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    require(std::isfinite(fractions[i]) && fractions[i] >= 0.0, ErrorCode::kNegativeDistance,
            "fractions must be finite and non-negative");
    require(i == 0 || fractions[i] > fractions[i - 1], ErrorCode::kNonAscending,
            "fractions must be strictly ascending");
    s.fractions.push_back(fractions[i]);
    s.distances.push_back(fractions[i] * dir.lambda_max);
  }
  return s;
}

}  // namespace orthotail
