#include "orthotail/model.hpp"

#include "binary_io.hpp"
#include "orthotail/error.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace orthotail {

namespace {

constexpr char kCheckpointMagic[5] = "OTCK";

DenseLayer zeros_like(const DenseLayer& l) {
  return {Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())};
}

bool same_shape(const DenseLayer& a, const DenseLayer& b) {
  return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size();
}

void write_layer(std::ostream& os, const DenseLayer& l) {
  for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j) detail::write_le<double>(os, l.weight(i, j));
  }
  for (Eigen::Index i = 0; i < l.bias.size(); ++i) detail::write_le<double>(os, l.bias(i));
}

void read_layer(std::istream& is, DenseLayer& l) {
  for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = detail::read_le<double>(is, "weights");
  }
  for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = detail::read_le<double>(is, "bias");
}

Matrix affine(const DenseLayer& l, const Matrix& x) { return (l.weight * x).colwise() + l.bias; }

}  // namespace

Parameters Parameters::zeros_like() const {
  Parameters out;
  out.feature.reserve(feature.size());
  for (const auto& l : feature) out.feature.push_back(orthotail::zeros_like(l));
  out.classifier = orthotail::zeros_like(classifier);
  return out;
}

bool Parameters::same_shape(const Parameters& other) const {
  if (feature.size() != other.feature.size()) return false;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    if (!orthotail::same_shape(feature[i], other.feature[i])) return false;
  }
  return orthotail::same_shape(classifier, other.classifier);
}

bool Parameters::all_finite() const {
  for (const auto& l : feature) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return classifier.weight.allFinite() && classifier.bias.allFinite();
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for (const auto& l : feature) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n + static_cast<std::size_t>(classifier.weight.size() + classifier.bias.size());
}

std::vector<Eigen::Map<Vector>> Parameters::tensors() {
  std::vector<Eigen::Map<Vector>> out;
  auto add = [&out](DenseLayer& l) {
    out.emplace_back(l.weight.data(), l.weight.size());
    out.emplace_back(l.bias.data(), l.bias.size());
  };
  for (auto& l : feature) add(l);
  add(classifier);
  return out;
}

ClassifierModel::ClassifierModel(std::vector<Eigen::Index> feature_dims, Eigen::Index num_classes)
    : dims_(std::move(feature_dims)), num_classes_(num_classes) {
  require(dims_.size() >= 2, ErrorCode::kConfigInvalid, "feature net needs input and output dims");
  require(num_classes_ >= 1, ErrorCode::kConfigInvalid, "need at least one class");
  for (const auto d : dims_) require(d >= 1, ErrorCode::kConfigInvalid, "layer dims must be positive");
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    params_.feature.push_back({Matrix::Zero(dims_[i + 1], dims_[i]), Vector::Zero(dims_[i + 1])});
  }
  params_.classifier = {Matrix::Zero(num_classes_, dims_.back()), Vector::Zero(num_classes_)};
}

ClassifierModel ClassifierModel::init_uniform(std::vector<Eigen::Index> feature_dims, Eigen::Index num_classes,
                                              std::uint64_t seed) {
  ClassifierModel model(std::move(feature_dims), num_classes);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](DenseLayer& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = dist(rng);
    }
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = dist(rng);
  };
  for (auto& l : model.params_.feature) fill(l);
  fill(model.params_.classifier);
  return model;
}

void ClassifierModel::save(std::ostream& os) const {
  detail::write_magic(os, kCheckpointMagic);
  detail::write_le<std::uint8_t>(os, kCheckpointVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims_.size()));
  for (const auto d : dims_) detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(num_classes_));
  for (const auto& l : params_.feature) write_layer(os, l);
  write_layer(os, params_.classifier);
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing checkpoint");
}

ClassifierModel ClassifierModel::load(std::istream& is) {
  detail::expect_magic(is, kCheckpointMagic, "checkpoint");
  const auto version = detail::read_le<std::uint8_t>(is, "checkpoint version");
  require(version == kCheckpointVersion, ErrorCode::kBadMagic,
          "unsupported checkpoint version " + std::to_string(version));
  const auto n = detail::read_le<std::uint32_t>(is, "layer count");
  require(n >= 2 && n < 1024, ErrorCode::kConfigInvalid, "implausible layer count in checkpoint");
  std::vector<Eigen::Index> dims;
  for (std::uint32_t i = 0; i < n; ++i) dims.push_back(detail::read_le<std::uint32_t>(is, "layer dims"));
  const auto classes = detail::read_le<std::uint32_t>(is, "class count");
  ClassifierModel model(std::move(dims), classes);
  for (auto& l : model.params_.feature) read_layer(is, l);
  read_layer(is, model.params_.classifier);
  return model;
}

void ClassifierModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path.string());
  save(os);
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path.string());
  return load(is);
}

Matrix forward_features(const ClassifierModel& model, const Matrix& inputs) {
  require(inputs.rows() == model.input_dim(), ErrorCode::kDimensionMismatch,
          "input dim " + std::to_string(inputs.rows()) + " != model input dim " + std::to_string(model.input_dim()));
  Matrix h = inputs;
  for (const auto& layer : model.params().feature) h = affine(layer, h).cwiseMax(0.0);
  require(h.allFinite(), ErrorCode::kNonFiniteActivation, "feature activations are not finite");
  return h;
}

Matrix forward_logits(const ClassifierModel& model, const Matrix& features) {
  require(features.rows() == model.feature_dim(), ErrorCode::kDimensionMismatch,
          "feature dim differs from classifier input dim");
  Matrix logits = affine(model.params().classifier, features);
  require(logits.allFinite(), ErrorCode::kNonFiniteActivation, "logits are not finite");
  return logits;
}

LossAndGrads loss_and_grads(const ClassifierModel& model, const Matrix& inputs, std::span<const Label> labels,
                            const FeatureHook& hook) {
  require(inputs.rows() == model.input_dim(), ErrorCode::kDimensionMismatch, "input dim differs from model");
  require(labels.size() == static_cast<std::size_t>(inputs.cols()), ErrorCode::kLengthMismatch,
          "label count differs from batch width");
  require(inputs.cols() >= 1, ErrorCode::kEmptyBatch, "empty batch");
  const Eigen::Index classes = model.num_classes();
  for (const Label y : labels) {
    require(y >= 0 && y < classes, ErrorCode::kLabelOutOfRange, "label " + std::to_string(y) + " out of range");
  }

  const auto& params = model.params();
  const std::size_t depth = params.feature.size();

  // activations[0] = inputs, activations[i + 1] = relu(layer_i(activations[i])).
  std::vector<Matrix> activations;
  activations.reserve(depth + 1);
  activations.push_back(inputs);
  for (const auto& layer : params.feature) activations.push_back(affine(layer, activations.back()).cwiseMax(0.0));
  require(activations.back().allFinite(), ErrorCode::kNonFiniteActivation, "feature activations are not finite");

  LossAndGrads out;
  out.features = activations.back();
  Matrix classifier_input = out.features;
  if (hook) hook(classifier_input, labels);
  out.logits = affine(params.classifier, classifier_input);

  const Eigen::Index batch = inputs.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Matrix probs(classes, batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto col = out.logits.col(j);
    const double shift = col.maxCoeff();
    const double log_norm = shift + std::log((col.array() - shift).exp().sum());
    loss += log_norm - col(labels[static_cast<std::size_t>(j)]);
    probs.col(j) = (col.array() - log_norm).exp();
  }
  out.loss = loss * inv_batch;
  require(std::isfinite(out.loss), ErrorCode::kNonFiniteLoss, "loss is not finite");

  // d loss / d logits = (softmax - onehot) / batch.
  Matrix delta = probs;
  for (Eigen::Index j = 0; j < batch; ++j) delta(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  delta *= inv_batch;

  out.grads = params.zeros_like();
  out.grads.classifier.weight.noalias() = delta * classifier_input.transpose();
  out.grads.classifier.bias = delta.rowwise().sum();
  Matrix upstream = params.classifier.weight.transpose() * delta;

  for (std::size_t k = depth; k-- > 0;) {
    // Rectifier mask from the unperturbed activation.
    Matrix pre_grad = upstream.array() * (activations[k + 1].array() > 0.0).cast<double>();
    out.grads.feature[k].weight.noalias() = pre_grad * activations[k].transpose();
    out.grads.feature[k].bias = pre_grad.rowwise().sum();
    if (k > 0) upstream = params.feature[k].weight.transpose() * pre_grad;
  }
  return out;
}

double LrSchedule::lr(int epoch) const {
  double rate = base_lr;
  if (warmup_epochs > 0 && epoch <= warmup_epochs) {
    rate *= static_cast<double>(std::max(epoch, 1)) / static_cast<double>(warmup_epochs);
  }
  for (const int m : milestones) {
    if (epoch > m) rate *= decay;
  }
  return rate;
}

void sgd_step(ClassifierModel& model, const Parameters& grads, OptimizerState& opt, int epoch) {
  Parameters& params = model.params();
  require(grads.same_shape(params), ErrorCode::kShapeMismatch, "gradient shapes differ from model parameters");
  if (opt.velocity.feature.empty() && opt.velocity.classifier.weight.size() == 0) opt.velocity = params.zeros_like();
  require(opt.velocity.same_shape(params), ErrorCode::kShapeMismatch, "velocity shapes differ from model parameters");

  const double rate = opt.schedule.lr(epoch);
  auto step = [&](DenseLayer& p, DenseLayer& v, const DenseLayer& g) {
    v.weight = opt.momentum * v.weight + g.weight;
    v.bias = opt.momentum * v.bias + g.bias;
    p.weight -= rate * v.weight;
    p.bias -= rate * v.bias;
  };
  for (std::size_t i = 0; i < params.feature.size(); ++i) step(params.feature[i], opt.velocity.feature[i], grads.feature[i]);
  step(params.classifier, opt.velocity.classifier, grads.classifier);
  require(params.all_finite(), ErrorCode::kNonFinite, "parameters became non-finite");
}

}  // namespace orthotail
