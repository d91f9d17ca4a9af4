#pragma once

#include "orthotail/linalg.hpp"
#include "orthotail/manifold.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace orthotail {

/// Fully connected layer y = W x + b, W stored out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

/// Parameter set of the feature net f (rectified dense layers) and the
/// linear classifier g. Also used for gradients and momentum buffers.
struct Parameters {
  std::vector<DenseLayer> feature;
  DenseLayer classifier;

  Parameters zeros_like() const;
  bool same_shape(const Parameters& other) const;
  bool all_finite() const;
  std::size_t size() const;

  /// Flat views in a fixed order (feature layers weight then bias, then the
  /// classifier), for finite-difference checks and serialization.
  std::vector<Eigen::Map<Vector>> tensors();
};

class ClassifierModel {
 public:
  static constexpr std::uint8_t kCheckpointVersion = 1;

  /// `feature_dims` = {d, h1, ..., p}; at least one layer.
  ClassifierModel(std::vector<Eigen::Index> feature_dims, Eigen::Index num_classes);

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ClassifierModel init_uniform(std::vector<Eigen::Index> feature_dims, Eigen::Index num_classes,
                                      std::uint64_t seed);

  Eigen::Index input_dim() const noexcept { return dims_.front(); }
  Eigen::Index feature_dim() const noexcept { return dims_.back(); }
  Eigen::Index num_classes() const noexcept { return num_classes_; }
  const std::vector<Eigen::Index>& feature_dims() const noexcept { return dims_; }

  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }

  /// Layout: "OTCK", u8 version, u32 n, u32 dims[n] (d..p), u32 C, then each
  /// feature layer's weight (row-major) and bias, then the classifier weight
  /// and bias; float64 little-endian.
  void save(std::ostream& os) const;
  static ClassifierModel load(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

 private:
  std::vector<Eigen::Index> dims_;
  Eigen::Index num_classes_;
  Parameters params_;
};

/// Z = f(X): rectified output of every feature layer.
Matrix forward_features(const ClassifierModel& model, const Matrix& inputs);
inline SampleMatrix forward_features(const ClassifierModel& model, const SampleMatrix& x) {
  Matrix z = forward_features(model, x.data());
  return x.has_labels() ? SampleMatrix(std::move(z), x.labels()) : SampleMatrix(std::move(z));
}

/// Logits g(Z), C x batch.
Matrix forward_logits(const ClassifierModel& model, const Matrix& features);

/// Called between f and g with the batch features and labels; may modify
/// feature columns in place. The backward pass treats the edit as an
/// additive constant.
using FeatureHook = std::function<void(Matrix& features, std::span<const Label> labels)>;

struct LossAndGrads {
  double loss = 0.0;
  Parameters grads;
  /// Features as produced by f, before any hook edit.
  Matrix features;
  /// Logits after the hook.
  Matrix logits;
};

/// Mean softmax cross-entropy of the batch and its gradient.
LossAndGrads loss_and_grads(const ClassifierModel& model, const Matrix& inputs, std::span<const Label> labels,
                            const FeatureHook& hook = {});

struct LrSchedule {
  double base_lr = 0.1;
  int warmup_epochs = 5;
  /// Epochs after which the rate is multiplied by `decay`.
  std::vector<int> milestones = {40, 50};
  double decay = 0.1;

  /// Rate for a 1-based epoch: linear warmup base*e/warmup over the first
  /// `warmup_epochs`, then one decay factor per milestone m < e.
  double lr(int epoch) const;
};

struct OptimizerState {
  LrSchedule schedule;
  double momentum = 0.9;
  Parameters velocity;
};

/// v <- momentum * v + g;  theta <- theta - lr(epoch) * v.
void sgd_step(ClassifierModel& model, const Parameters& grads, OptimizerState& opt, int epoch);

}  // namespace orthotail
