#pragma once

#include "orthotail/linalg.hpp"
#include "orthotail/manifold.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace orthotail {

/// (1/bs) Z_B Z_B^T for one batch of feature columns.
SymMatrix batch_covariance(const Matrix& batch);
inline SymMatrix batch_covariance(const SampleMatrix& batch) { return batch_covariance(batch.data()); }

/// Running sum of raw per-batch Gram matrices. Finalizing divides by the
/// true number of columns, so uneven batch widths are exact.
class CovAccumulator {
 public:
  static constexpr std::uint8_t kSnapshotVersion = 1;

  explicit CovAccumulator(Eigen::Index dim, int epoch_tag = 0);

  Eigen::Index dim() const noexcept { return gram_sum_.rows(); }
  std::uint64_t sample_count() const noexcept { return sample_count_; }
  int epoch_tag() const noexcept { return epoch_tag_; }
  const Matrix& gram_sum() const noexcept { return gram_sum_; }

  CovAccumulator& accumulate(const Matrix& batch);
  CovAccumulator& accumulate(const SampleMatrix& batch) { return accumulate(batch.data()); }

  /// Adds another accumulator's sums and counts.
  CovAccumulator& merge(const CovAccumulator& other);

  /// gram_sum / sample_count.
  SymMatrix finalize() const;

  void reset(int epoch_tag);

  /// Snapshot layout: u8 version, u32 p, u64 count, p*p float64 row-major,
  /// all little-endian.
  void save(std::ostream& os) const;
  static CovAccumulator load(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static CovAccumulator load(const std::filesystem::path& path);

 private:
  Matrix gram_sum_;
  std::uint64_t sample_count_ = 0;
  int epoch_tag_ = 0;
};

}  // namespace orthotail
