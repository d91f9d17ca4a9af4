#pragma once

#include "orthotail/linalg.hpp"

#include <span>
#include <vector>

namespace orthotail {

using Label = int;

/// d x N collection of points, one per column, with optional class labels.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  explicit SampleMatrix(Matrix data);
  SampleMatrix(Matrix data, std::vector<Label> labels);

  Eigen::Index dim() const noexcept { return data_.rows(); }
  Eigen::Index count() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  /// Columns selected by index, labels carried along.
  SampleMatrix select(std::span<const Eigen::Index> columns) const;

 private:
  Matrix data_;
  std::vector<Label> labels_;
};

/// Orthogonal direction of a manifold together with the spectrum summary it
/// was derived from.
struct OrthoDirection {
  Vector u;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_mean = 0.0;
  Vector centroid;
};

/// Shift distances expressed as fractions of lambda_max.
struct DistanceSchedule {
  std::vector<double> fractions;
  std::vector<double> distances;
};

/// Number of leading eigenvalues averaged into lambda_mean.
inline constexpr std::size_t kLambdaMeanTopK = 10;

/// 0, 0.01, ..., 0.05 of lambda_max.
std::vector<double> default_fractions();

Vector centroid(const SampleMatrix& x);

/// Second-moment matrix (1/N) Y Y^T with Y = X - c 1^T when `centered`,
/// otherwise Y = X.
SymMatrix manifold_covariance(const SampleMatrix& x, bool centered);

/// Direction U minimizing sum_i ((x_i - c)^T U)^2 (centered) or
/// sum_i (x_i^T U)^2 (uncentered) over unit vectors.
OrthoDirection orthogonal_direction(const SampleMatrix& x, bool centered);

/// Direction from an already formed covariance; `centroid` is stored as given.
OrthoDirection direction_from_covariance(const SymMatrix& cov, Vector centroid);

/// x'_i = x_i + L U for every column.
SampleMatrix shift_manifold(const SampleMatrix& x, const Vector& u, double distance);
inline SampleMatrix shift_manifold(const SampleMatrix& x, const OrthoDirection& dir, double distance) {
  return shift_manifold(x, dir.u, distance);
}

DistanceSchedule build_schedule(const OrthoDirection& dir, std::span<const double> fractions);

}  // namespace orthotail
