#include "orthotail/error.hpp"
#include "orthotail/eval.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace ot = orthotail;
using ot::Matrix;
using ot::SampleMatrix;
using ot::Vector;

namespace {

ot::ClassifierModel linear_classifier(const Matrix& w, const Vector& b) {
  ot::ClassifierModel m({w.cols(), w.cols()}, w.rows());
  m.params().classifier.weight = w;
  m.params().classifier.bias = b;
  return m;
}

}  // namespace

TEST(Rif, Examples) {
  const std::vector<double> base = {0.9, 0.8}, noisy = {0.85, 0.6};
  EXPECT_NEAR(ot::rif(base, noisy), 0.15, 1e-15);
  EXPECT_EQ(ot::rif(base, base), 0.0);
  const std::vector<double> one = {0.7}, one_n = {0.2};
  EXPECT_EQ(ot::rif(one, one_n), 0.0);
}

TEST(Rif, Properties) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u01;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(6), b(6);
    for (std::size_t i = 0; i < 6; ++i) a[i] = u01(rng), b[i] = u01(rng);
    const double r = ot::rif(a, b);
    EXPECT_GE(r, 0.0);
    std::vector<double> ap(a.rbegin(), a.rend()), bp(b.rbegin(), b.rend());
    EXPECT_EQ(ot::rif(ap, bp), r);
    std::vector<double> bs(b);
    for (auto& v : bs) v -= 0.125;
    EXPECT_NEAR(ot::rif(a, bs), r, 1e-15);
  }
}

TEST(Rif, Errors) {
  const std::vector<double> a = {0.1, 0.2}, b = {0.1};
  EXPECT_THROW(ot::rif(a, b), ot::Error);
  EXPECT_THROW(ot::rif({}, {}), ot::Error);
}

TEST(ClassAccuracies, ConstantPredictor) {
  const auto m = linear_classifier(Matrix::Zero(2, 2), Vector{{1.0, 0.0}});
  const SampleMatrix z(Matrix::Ones(2, 4), {0, 1, 0, 1});
  EXPECT_EQ(ot::class_accuracies(m, z), (std::vector<double>{1.0, 0.0}));
}

TEST(ClassAccuracies, PerfectAndTally) {
  const auto m = linear_classifier(Matrix::Identity(3, 3), Vector::Zero(3));
  const SampleMatrix perfect(Matrix::Identity(3, 3), {0, 1, 2});
  EXPECT_EQ(ot::class_accuracies(m, perfect), (std::vector<double>(3, 1.0)));

  const Matrix z = ot::testing::random_matrix(3, 40, 6);
  std::vector<ot::Label> y(40);
  for (std::size_t j = 0; j < 40; ++j) y[j] = static_cast<ot::Label>(j % 3);
  std::vector<double> hit(3, 0.0), seen(3, 0.0);
  for (Eigen::Index j = 0; j < 40; ++j) {
    Eigen::Index arg = 0;
    z.col(j).maxCoeff(&arg);
    const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(j)]);
    seen[c] += 1.0;
    if (arg == static_cast<Eigen::Index>(c)) hit[c] += 1.0;
  }
  const auto acc = ot::class_accuracies(m, SampleMatrix(z, y));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(acc[c], hit[c] / seen[c]);
}

TEST(ClassAccuracies, MissingClass) {
  const auto m = linear_classifier(Matrix::Identity(3, 3), Vector::Zero(3));
  try {
    ot::class_accuracies(m, SampleMatrix(Matrix::Identity(3, 2), {0, 1}));
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kMissingClass);
  }
}

TEST(RobustnessProfile, ZeroScheduleEntry) {
  const auto m = ot::ClassifierModel::init_uniform({4, 4}, 2, 2);
  std::vector<ot::Label> y(30);
  for (std::size_t j = 0; j < 30; ++j) y[j] = static_cast<ot::Label>(j % 2);
  const SampleMatrix z(ot::testing::random_matrix(4, 30, 7).cwiseAbs(), y);
  const auto dir = ot::orthogonal_direction(z, false);
  const std::vector<double> f = {0.0};
  const auto p = ot::robustness_profile(m, z, dir, ot::build_schedule(dir, f));
  EXPECT_EQ(p.noisy_acc[0], p.base_acc);
  EXPECT_EQ(p.base_acc, ot::class_accuracies(m, z));
  EXPECT_EQ(p.rif, (std::vector<double>{0.0}));
}

TEST(RobustnessProfile, ClassifierBlindToDirection) {
  Matrix z = ot::testing::random_matrix(3, 50, 8);
  z.row(2).setZero();
  std::vector<ot::Label> y(50);
  for (Eigen::Index j = 0; j < 50; ++j) y[static_cast<std::size_t>(j)] = z(0, j) > z(1, j) ? 0 : 1;
  const SampleMatrix s(z, y);
  Matrix w = Matrix::Zero(2, 3);
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  const auto m = linear_classifier(w, Vector::Zero(2));
  const auto dir = ot::orthogonal_direction(s, false);
  ASSERT_LE((dir.u - Vector::Unit(3, 2)).norm(), 1e-10);
  const std::vector<double> f = {0.0, 1.0, 10.0, 100.0};
  const auto p = ot::robustness_profile(m, s, dir, ot::build_schedule(dir, f));
  for (const auto& acc : p.noisy_acc) EXPECT_EQ(acc, p.base_acc);
  for (const double r : p.rif) EXPECT_EQ(r, 0.0);
}

TEST(RobustnessProfile, Deterministic) {
  const auto m = ot::ClassifierModel::init_uniform({4, 6, 5}, 2, 4);
  std::vector<ot::Label> y(40);
  for (std::size_t j = 0; j < 40; ++j) y[j] = static_cast<ot::Label>(j % 2);
  const SampleMatrix x(ot::testing::random_matrix(4, 40, 9), y);
  const auto f = ot::default_fractions();
  const auto a = ot::evaluate_feature_robustness(m, x, f);
  const auto b = ot::evaluate_feature_robustness(m, x, f);
  EXPECT_EQ(a.profile.rif, b.profile.rif);
  EXPECT_EQ(a.profile.noisy_acc, b.profile.noisy_acc);
  for (const auto& acc : a.profile.noisy_acc)
    for (const double v : acc) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(ProfileCsv, Layout) {
  ot::RobustnessProfile p;
  p.schedule = {{0.0, 0.02}, {0.0, 1.0}};
  p.base_acc = {1.0, 0.5};
  p.noisy_acc = {{1.0, 0.5}, {0.75, 0.25}};
  p.rif = {0.0, 0.0};
  std::ostringstream os;
  ot::write_profile_csv(os, p);
  EXPECT_EQ(os.str(),
            "L_fraction,class_id,base_acc,noisy_acc,diff\n"
            "0,0,1,1,0\n0,1,0.5,0.5,0\n0.02,0,1,0.75,0.25\n0.02,1,0.5,0.25,0.25\n");
}

TEST(BalancedAccuracy, Mean) {
  const std::vector<double> a = {1.0, 0.5, 0.0};
  EXPECT_DOUBLE_EQ(ot::balanced_accuracy(a), 0.5);
}
