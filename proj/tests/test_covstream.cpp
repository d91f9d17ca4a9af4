#include "orthotail/covstream.hpp"
#include "orthotail/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace ot = orthotail;
using ot::CovAccumulator;
using ot::Matrix;

TEST(BatchCovariance, Examples) {
  EXPECT_EQ(ot::batch_covariance(Matrix{{1.0, -1.0}}).matrix(), Matrix::Constant(1, 1, 1.0));
  EXPECT_EQ(ot::batch_covariance(Matrix::Zero(3, 4)).matrix(), Matrix::Zero(3, 3));
  const Matrix z = ot::testing::random_matrix(4, 8, 40);
  EXPECT_LE(ot::testing::rel_frobenius(ot::batch_covariance(z).matrix(), ot::testing::naive_second_moment(z)), 1e-12);
}

TEST(BatchCovariance, EmptyBatch) {
  try {
    ot::batch_covariance(Matrix(3, 0));
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kEmptyBatch);
  }
}

TEST(CovAccumulator, SingleStepStoresRawGram) {
  const Matrix z = ot::testing::random_matrix(5, 7, 41);
  CovAccumulator acc(5);
  acc.accumulate(z);
  EXPECT_EQ(acc.sample_count(), 7u);
  EXPECT_LE(ot::testing::rel_frobenius(acc.gram_sum(), z * z.transpose()), 1e-14);
  EXPECT_EQ(acc.finalize().matrix(), ot::batch_covariance(z).matrix());
}

TEST(CovAccumulator, RaggedSplitIsExact) {
  const Matrix z = ot::testing::random_matrix(16, 128, 42);
  CovAccumulator acc(16);
  Eigen::Index start = 0;
  for (const Eigen::Index w : {32, 32, 32, 16, 16}) {
    acc.accumulate(Matrix(z.middleCols(start, w)));
    start += w;
  }
  EXPECT_EQ(acc.sample_count(), 128u);
  EXPECT_LE(ot::testing::rel_frobenius(acc.finalize().matrix(), ot::testing::naive_second_moment(z)), 1e-12);
}

TEST(CovAccumulator, TenBatchEpoch) {
  CovAccumulator acc(6, 3);
  Matrix all(6, 0);
  for (std::uint64_t b = 0; b < 10; ++b) {
    const Matrix z = ot::testing::random_matrix(6, 5 + static_cast<Eigen::Index>(b), 500 + b);
    acc.accumulate(z);
    Matrix grown(6, all.cols() + z.cols());
    grown << all, z;
    all = grown;
  }
  EXPECT_EQ(acc.epoch_tag(), 3);
  EXPECT_LE(ot::testing::rel_frobenius(acc.finalize().matrix(), ot::testing::naive_second_moment(all)), 1e-12);
}

TEST(CovAccumulator, MergeMatchesSequential) {
  CovAccumulator seq(4), a(4), b(4);
  for (std::uint64_t k = 0; k < 6; ++k) {
    const Matrix z = ot::testing::random_matrix(4, 9, 600 + k);
    seq.accumulate(z);
    (k % 2 == 0 ? a : b).accumulate(z);
  }
  a.merge(b);
  EXPECT_EQ(a.sample_count(), seq.sample_count());
  EXPECT_LE(ot::testing::rel_frobenius(a.finalize().matrix(), seq.finalize().matrix()), 1e-14);
}

TEST(CovAccumulator, ZeroFeatures) {
  CovAccumulator acc(3);
  acc.accumulate(Matrix::Zero(3, 10));
  EXPECT_EQ(acc.finalize().matrix(), Matrix::Zero(3, 3));
}

TEST(CovAccumulator, Errors) {
  CovAccumulator acc(3);
  try {
    acc.finalize();
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kEmptyAccumulator);
  }
  try {
    acc.accumulate(Matrix::Ones(2, 2));
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kDimensionMismatch);
  }
}

TEST(CovAccumulator, ResetClears) {
  CovAccumulator acc(2);
  acc.accumulate(Matrix::Ones(2, 3));
  acc.reset(9);
  EXPECT_EQ(acc.sample_count(), 0u);
  EXPECT_EQ(acc.epoch_tag(), 9);
  EXPECT_EQ(acc.gram_sum(), Matrix::Zero(2, 2));
}

TEST(CovAccumulator, SnapshotRoundTrip) {
  CovAccumulator acc(7);
  acc.accumulate(ot::testing::random_matrix(7, 13, 43));
  std::stringstream ss;
  acc.save(ss);
  EXPECT_EQ(ss.str().size(), 1u + 4u + 8u + 7u * 7u * 8u);
  const auto back = CovAccumulator::load(ss);
  EXPECT_EQ(back.sample_count(), 13u);
  EXPECT_EQ(back.gram_sum(), acc.gram_sum());
}

TEST(CovAccumulator, TruncatedSnapshot) {
  CovAccumulator acc(3);
  acc.accumulate(Matrix::Ones(3, 2));
  std::stringstream ss;
  acc.save(ss);
  std::stringstream cut(ss.str().substr(0, 20));
  try {
    CovAccumulator::load(cut);
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kTruncatedFile);
  }
}

TEST(CovAccumulator, OrderInvariance) {
  const Matrix z = ot::testing::random_matrix(8, 60, 44);
  CovAccumulator fwd(8), rev(8);
  for (Eigen::Index s = 0; s < 60; s += 12) fwd.accumulate(Matrix(z.middleCols(s, 12)));
  for (Eigen::Index s = 48; s >= 0; s -= 12) rev.accumulate(Matrix(z.middleCols(s, 12)));
  EXPECT_LE(ot::testing::rel_frobenius(fwd.finalize().matrix(), rev.finalize().matrix()), 1e-12);
}
