#include "orthotail/covstream.hpp"

#include "binary_io.hpp"
#include "orthotail/error.hpp"

#include <fstream>

namespace orthotail {

SymMatrix batch_covariance(const Matrix& batch) {
  require(batch.cols() >= 1, ErrorCode::kEmptyBatch, "batch has no columns");
  require(batch.allFinite(), ErrorCode::kNonFinite, "batch contains NaN or Inf");
  return SymMatrix(gram(batch) / static_cast<double>(batch.cols()));
}

CovAccumulator::CovAccumulator(Eigen::Index dim, int epoch_tag)
    : gram_sum_(Matrix::Zero(dim, dim)), epoch_tag_(epoch_tag) {
  require(dim >= 1, ErrorCode::kDimensionZero, "accumulator dimension must be positive");
}

CovAccumulator& CovAccumulator::accumulate(const Matrix& batch) {
  require(batch.rows() == dim(), ErrorCode::kDimensionMismatch, "batch feature dimension differs from accumulator");
  require(batch.allFinite(), ErrorCode::kNonFinite, "batch contains NaN or Inf");
  gram_sum_ += gram(batch);
  sample_count_ += static_cast<std::uint64_t>(batch.cols());
  return *this;
}

CovAccumulator& CovAccumulator::merge(const CovAccumulator& other) {
  require(other.dim() == dim(), ErrorCode::kDimensionMismatch, "cannot merge accumulators of different dimension");
  gram_sum_ += other.gram_sum_;
  sample_count_ += other.sample_count_;
  return *this;
}

SymMatrix CovAccumulator::finalize() const {
  require(sample_count_ >= 1, ErrorCode::kEmptyAccumulator, "no samples accumulated");
  return SymMatrix(gram_sum_ / static_cast<double>(sample_count_));
}

void CovAccumulator::reset(int epoch_tag) {
  gram_sum_.setZero();
  sample_count_ = 0;
  epoch_tag_ = epoch_tag;
}

void CovAccumulator::save(std::ostream& os) const {
  detail::write_le<std::uint8_t>(os, kSnapshotVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim()));
  detail::write_le<std::uint64_t>(os, sample_count_);
  for (Eigen::Index i = 0; i < dim(); ++i) {
    for (Eigen::Index j = 0; j < dim(); ++j) detail::write_le<double>(os, gram_sum_(i, j));
  }
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing covariance snapshot");
}

CovAccumulator CovAccumulator::load(std::istream& is) {
  const auto version = detail::read_le<std::uint8_t>(is, "snapshot version");
  require(version == kSnapshotVersion, ErrorCode::kBadMagic,
          "unsupported covariance snapshot version " + std::to_string(version));
  const auto p = detail::read_le<std::uint32_t>(is, "snapshot dimension");
  CovAccumulator acc(static_cast<Eigen::Index>(p));
  acc.sample_count_ = detail::read_le<std::uint64_t>(is, "snapshot count");
  for (Eigen::Index i = 0; i < acc.dim(); ++i) {
    for (Eigen::Index j = 0; j < acc.dim(); ++j) acc.gram_sum_(i, j) = detail::read_le<double>(is, "snapshot entries");
  }
  return acc;
}

void CovAccumulator::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path.string());
  save(os);
}

CovAccumulator CovAccumulator::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path.string());
  return load(is);
}

}  // namespace orthotail
