#pragma once

#include "orthotail/linalg.hpp"
#include "orthotail/manifold.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace orthotail {

using Rng = std::mt19937_64;

struct OurConfig {
  double mu = 0.02;
  /// A class is tail iff its count < ratio * max count.
  double tail_threshold_ratio = 0.2;
  /// First epoch (1-based) in which features are perturbed. Covariance
  /// accumulation starts one epoch earlier.
  int start_epoch = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-class tail flags.
using TailMask = std::vector<bool>;

TailMask select_tail_classes(std::span<const std::size_t> counts, double ratio);

/// In place: column j of `features` (for j in `columns`, in order) gets
/// mu * lambda_mean * eps_j * u added, eps_j ~ N(0, 1) drawn from `rng`.
/// With mu == 0 nothing is drawn and the matrix is untouched.
void perturb_columns(Matrix& features, std::span<const Eigen::Index> columns, const Vector& u, double lambda_mean,
                     double mu, Rng& rng);

/// Orthogonal uncertainty representation of a tail-class feature block:
/// every column z_i becomes z_i + mu * lambda_mean * eps_i * u.
SampleMatrix our_transform(const SampleMatrix& tail_features, const Vector& u, double lambda_mean, double mu, Rng& rng);

}  // namespace orthotail
