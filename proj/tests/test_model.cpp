#include "orthotail/augment.hpp"
#include "orthotail/error.hpp"
#include "orthotail/model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace ot = orthotail;
using ot::ClassifierModel;
using ot::Matrix;
using ot::Vector;

namespace {

// Loop-based forward pass over the same parameters.
Matrix loop_features(const ClassifierModel& m, const Matrix& x) {
  Matrix h = x;
  for (const auto& layer : m.params().feature) {
    Matrix next(layer.weight.rows(), h.cols());
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      for (Eigen::Index o = 0; o < layer.weight.rows(); ++o) {
        double s = layer.bias(o);
        for (Eigen::Index i = 0; i < layer.weight.cols(); ++i) s += layer.weight(o, i) * h(i, j);
        next(o, j) = s > 0.0 ? s : 0.0;
      }
    }
    h = next;
  }
  return h;
}

std::vector<ot::Label> labels_for(Eigen::Index n, int classes) {
  std::vector<ot::Label> y(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) y[static_cast<std::size_t>(j)] = static_cast<ot::Label>((j * 7 + 3) % classes);
  return y;
}

double max_fd_error(ClassifierModel model, const Matrix& x, const std::vector<ot::Label>& y,
                    const ot::FeatureHook& hook, double step) {
  const auto analytic = ot::loss_and_grads(model, x, y, hook);
  auto grads = analytic.grads;
  auto g = grads.tensors();
  auto p = model.params().tensors();
  double worst = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (Eigen::Index i = 0; i < p[t].size(); ++i) {
      const double orig = p[t](i);
      p[t](i) = orig + step;
      const double up = ot::loss_and_grads(model, x, y, hook).loss;
      p[t](i) = orig - step;
      const double down = ot::loss_and_grads(model, x, y, hook).loss;
      p[t](i) = orig;
      const double fd = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(fd), std::abs(g[t](i)), 1e-8});
      worst = std::max(worst, std::abs(fd - g[t](i)) / denom);
    }
  }
  return worst;
}

// Adds the same seeded perturbation on every call, so it acts as a constant.
ot::FeatureHook fixed_our_hook(const Vector& u, double lambda_mean, double mu, std::uint64_t seed) {
  return [=](Matrix& z, std::span<const ot::Label> labels) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == 0) cols.push_back(static_cast<Eigen::Index>(j));
    ot::Rng rng(seed);
    ot::perturb_columns(z, cols, u, lambda_mean, mu, rng);
  };
}

}  // namespace

TEST(Forward, ZeroLayerGivesZeroFeatures) {
  const ClassifierModel m({3, 4}, 2);
  EXPECT_EQ(ot::forward_features(m, ot::testing::random_matrix(3, 5, 1)), Matrix::Zero(4, 5));
}

TEST(Forward, IdentityLayerRectifies) {
  ClassifierModel m({3, 3}, 2);
  m.params().feature[0].weight = Matrix::Identity(3, 3);
  const Matrix v{{1.5}, {-2.0}, {0.25}};
  EXPECT_EQ(ot::forward_features(m, v), (Matrix{{1.5}, {0.0}, {0.25}}));
}

TEST(Forward, MatchesLoopImplementation) {
  const auto m = ClassifierModel::init_uniform({5, 9, 4}, 3, 11);
  const Matrix x = ot::testing::random_matrix(5, 17, 12);
  const Matrix z = ot::forward_features(m, x);
  EXPECT_LE((z - loop_features(m, x)).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix logits = ot::forward_logits(m, z);
  const auto& c = m.params().classifier;
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index k = 0; k < 3; ++k) {
      double s = c.bias(k);
      for (Eigen::Index i = 0; i < 4; ++i) s += c.weight(k, i) * z(i, j);
      EXPECT_NEAR(logits(k, j), s, 1e-10);
    }
}

TEST(Logits, ZeroAndBiasOnly) {
  ClassifierModel m({2, 2}, 2);
  const Matrix z = ot::testing::random_matrix(2, 6, 2).cwiseAbs();
  EXPECT_EQ(ot::forward_logits(m, z), Matrix::Zero(2, 6));
  m.params().classifier.bias = Vector{{1.0, 2.0}};
  const Matrix l = ot::forward_logits(m, z);
  for (Eigen::Index j = 0; j < 6; ++j) {
    Eigen::Index arg = 0;
    l.col(j).maxCoeff(&arg);
    EXPECT_EQ(arg, 1);
  }
}

TEST(Loss, UniformLogitsGiveLogC) {
  const ClassifierModel m({4, 3}, 5);
  const auto r = ot::loss_and_grads(m, ot::testing::random_matrix(4, 8, 3), labels_for(8, 5));
  EXPECT_NEAR(r.loss, std::log(5.0), 1e-15);
}

TEST(Loss, FiniteDifferencesThreeLayer) {
  const auto m = ClassifierModel::init_uniform({6, 10, 8, 5}, 4, 21);
  const Matrix x = ot::testing::random_matrix(6, 12, 22);
  EXPECT_LE(max_fd_error(m, x, labels_for(12, 4), {}, 1e-5), 1e-4);
}

TEST(Loss, FiniteDifferencesWithHook) {
  const auto m = ClassifierModel::init_uniform({6, 10, 5}, 3, 23);
  const Matrix x = ot::testing::random_matrix(6, 12, 24);
  const Vector u = ot::testing::random_matrix(5, 1, 25).col(0).normalized();
  EXPECT_LE(max_fd_error(m, x, labels_for(12, 3), fixed_our_hook(u, 2.0, 0.3, 26), 1e-5), 1e-4);
}

TEST(Loss, ZeroMuHookMatchesNoHook) {
  const auto m = ClassifierModel::init_uniform({4, 6, 3}, 3, 27);
  const Matrix x = ot::testing::random_matrix(4, 9, 28);
  const auto y = labels_for(9, 3);
  const auto a = ot::loss_and_grads(m, x, y);
  const auto b = ot::loss_and_grads(m, x, y, fixed_our_hook(Vector::Unit(3, 0), 5.0, 0.0, 1));
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.grads.classifier.weight, b.grads.classifier.weight);
  EXPECT_EQ(a.grads.feature[0].weight, b.grads.feature[0].weight);
  EXPECT_EQ(a.grads.feature[1].bias, b.grads.feature[1].bias);
}

TEST(Loss, PermutationEquivariance) {
  const auto m = ClassifierModel::init_uniform({4, 6, 3}, 3, 29);
  const Matrix x = ot::testing::random_matrix(4, 10, 30);
  const auto y = labels_for(10, 3);
  std::vector<Eigen::Index> perm(10);
  std::iota(perm.rbegin(), perm.rend(), Eigen::Index{0});
  Matrix xp(4, 10);
  std::vector<ot::Label> yp(10);
  for (std::size_t j = 0; j < 10; ++j) {
    xp.col(static_cast<Eigen::Index>(j)) = x.col(perm[j]);
    yp[j] = y[static_cast<std::size_t>(perm[j])];
  }
  const auto a = ot::loss_and_grads(m, x, y);
  const auto b = ot::loss_and_grads(m, xp, yp);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(b.features.col(static_cast<Eigen::Index>(j)), a.features.col(perm[j]));
}

TEST(Loss, Errors) {
  const ClassifierModel m({2, 2}, 2);
  const std::vector<ot::Label> bad = {0, 2};
  try {
    ot::loss_and_grads(m, Matrix::Zero(2, 2), bad);
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kLabelOutOfRange);
  }
}

TEST(Schedule, WarmupAndMilestones) {
  ot::LrSchedule s;
  EXPECT_DOUBLE_EQ(s.lr(1), 0.02);
  EXPECT_DOUBLE_EQ(s.lr(5), 0.1);
  EXPECT_DOUBLE_EQ(s.lr(40), 0.1);
  EXPECT_NEAR(s.lr(41), 0.01, 1e-15);
  EXPECT_NEAR(s.lr(51), 0.001, 1e-15);
  s.milestones = {160, 180};
  EXPECT_NEAR(s.lr(170), 0.01, 1e-15);
  EXPECT_NEAR(s.lr(190), 0.001, 1e-15);
}

TEST(Sgd, PlainStep) {
  ClassifierModel m({2, 2}, 2);
  auto g = m.params().zeros_like();
  g.classifier.bias = Vector{{1.0, -2.0}};
  ot::OptimizerState opt{ot::LrSchedule{0.1, 0, {}, 0.1}, 0.0, {}};
  ot::sgd_step(m, g, opt, 1);
  EXPECT_NEAR(m.params().classifier.bias(0), -0.1, 1e-15);
  EXPECT_NEAR(m.params().classifier.bias(1), 0.2, 1e-15);
}

TEST(Sgd, MomentumUnrolled) {
  ClassifierModel m({2, 2}, 2);
  auto g = m.params().zeros_like();
  g.feature[0].weight.setConstant(0.5);
  ot::OptimizerState opt{ot::LrSchedule{1.0, 0, {}, 0.1}, 0.9, {}};
  ot::sgd_step(m, g, opt, 1);
  ot::sgd_step(m, g, opt, 2);
  EXPECT_NEAR(m.params().feature[0].weight(1, 0), -(0.5 + 1.9 * 0.5), 1e-15);
}

TEST(Sgd, ShapeMismatch) {
  ClassifierModel m({2, 2}, 2);
  const ClassifierModel other({2, 3}, 2);
  ot::OptimizerState opt;
  EXPECT_THROW(ot::sgd_step(m, other.params(), opt, 1), ot::Error);
}

TEST(Checkpoint, RoundTrip) {
  const auto m = ClassifierModel::init_uniform({5, 7, 3}, 4, 31);
  std::stringstream ss;
  m.save(ss);
  EXPECT_EQ(ss.str().substr(0, 4), "OTCK");
  const auto back = ClassifierModel::load(ss);
  EXPECT_EQ(back.feature_dims(), m.feature_dims());
  EXPECT_EQ(back.num_classes(), 4);
  EXPECT_EQ(back.params().feature[1].weight, m.params().feature[1].weight);
  EXPECT_EQ(back.params().classifier.bias, m.params().classifier.bias);
}

TEST(Checkpoint, BadMagic) {
  std::stringstream ss("OTDS\x01");
  try {
    ClassifierModel::load(ss);
    FAIL();
  } catch (const ot::Error& e) {
    EXPECT_EQ(e.code(), ot::ErrorCode::kBadMagic);
  }
}

TEST(Init, UniformBoundsAndDeterminism) {
  const auto a = ClassifierModel::init_uniform({16, 8}, 3, 5);
  const auto b = ClassifierModel::init_uniform({16, 8}, 3, 5);
  EXPECT_EQ(a.params().feature[0].weight, b.params().feature[0].weight);
  EXPECT_LE(a.params().feature[0].weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(a.params().classifier.weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(8.0));
}
