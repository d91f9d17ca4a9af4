#include "orthotail/train.hpp"

#include "orthotail/covstream.hpp"
#include "orthotail/error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace orthotail {

namespace {

TrainResult run_loop(const LabeledDataset& data, ClassifierModel model, OptimizerState opt, const TrainConfig& cfg,
                     const OurConfig* our) {
  require(cfg.epochs >= 0, ErrorCode::kConfigInvalid, "epochs must be non-negative");
  require(cfg.batch_size >= 1, ErrorCode::kConfigInvalid, "batch size must be positive");
  require(data.dim() == model.input_dim(), ErrorCode::kDimensionMismatch, "dataset dim differs from model input");
  require(data.num_classes == model.num_classes(), ErrorCode::kDimensionMismatch,
          "dataset class count differs from model");
  TailMask tail;
  if (our != nullptr) {
    our->validate();
    require(our->start_epoch <= cfg.epochs, ErrorCode::kConfigInvalid, "start_epoch exceeds the number of epochs");
    tail = select_tail_classes(data.counts, our->tail_threshold_ratio);
  }
  const bool any_tail = std::find(tail.begin(), tail.end(), true) != tail.end();

  const Matrix& x = data.samples.data();
  const auto& labels = data.samples.labels();
  const Eigen::Index n = data.size();
  const auto classes = static_cast<std::size_t>(data.num_classes);

  Rng shuffle_rng(cfg.shuffle_seed);
  Rng our_rng(our != nullptr ? our->seed : 0);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result{std::move(model), {}, std::nullopt};
  CovAccumulator acc(result.model.feature_dim());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const bool accumulate = our != nullptr && epoch >= our->start_epoch - 1;
    const EpochArtifacts* prev = result.final_artifacts ? &*result.final_artifacts : nullptr;
    const bool perturb = our != nullptr && epoch >= our->start_epoch && our->mu > 0.0 && any_tail;
    require(!perturb || (prev != nullptr && prev->epoch == epoch - 1), ErrorCode::kConfigInvalid,
            "no direction from the previous epoch");
    acc.reset(epoch);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = opt.schedule.lr(epoch);
    std::vector<std::size_t> correct(classes, 0);
    std::vector<std::size_t> seen(classes, 0);
    double loss_sum = 0.0;

    FeatureHook hook;
    if (perturb) {
      hook = [&](Matrix& features, std::span<const Label> batch_labels) {
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < batch_labels.size(); ++j) {
          if (tail[static_cast<std::size_t>(batch_labels[j])]) cols.push_back(static_cast<Eigen::Index>(j));
        }
        perturb_columns(features, cols, prev->direction.u, prev->direction.lambda_mean, our->mu, our_rng);
        rec.perturbed_columns += cols.size();
      };
    }

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index width = std::min(cfg.batch_size, n - start);
      const std::span<const Eigen::Index> idx(order.data() + start, static_cast<std::size_t>(width));
      const Matrix batch = x(Eigen::all, idx);
      std::vector<Label> batch_labels(idx.size());
      for (std::size_t j = 0; j < idx.size(); ++j) batch_labels[j] = labels[static_cast<std::size_t>(idx[j])];

      LossAndGrads step = loss_and_grads(result.model, batch, batch_labels, hook);
      if (accumulate) acc.accumulate(step.features);

      for (Eigen::Index j = 0; j < width; ++j) {
        Eigen::Index pred = 0;
        step.logits.col(j).maxCoeff(&pred);
        const auto y = static_cast<std::size_t>(batch_labels[static_cast<std::size_t>(j)]);
        ++seen[y];
        if (pred == static_cast<Eigen::Index>(y)) ++correct[y];
      }
      loss_sum += step.loss * static_cast<double>(width);
      sgd_step(result.model, step.grads, opt, epoch);
    }

    if (accumulate) {
      EpochArtifacts art;
      art.epoch = epoch;
      art.direction = direction_from_covariance(acc.finalize(), Vector());
      art.sample_count = acc.sample_count();
      result.log.artifacts.push_back(art);
      result.final_artifacts = std::move(art);
    }

    rec.loss = n > 0 ? loss_sum / static_cast<double>(n) : 0.0;
    rec.our_active = perturb;
    rec.class_accuracy.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      rec.class_accuracy[c] = seen[c] > 0 ? static_cast<double>(correct[c]) / static_cast<double>(seen[c]) : 0.0;
    }
    result.log.epochs.push_back(std::move(rec));
  }
  return result;
}

}  // namespace

TrainResult train_run(const LabeledDataset& data, ClassifierModel model, OptimizerState opt, const TrainConfig& cfg,
                      const OurConfig& our) {
  return run_loop(data, std::move(model), std::move(opt), cfg, &our);
}

TrainResult plain_train_run(const LabeledDataset& data, ClassifierModel model, OptimizerState opt,
                            const TrainConfig& cfg) {
  return run_loop(data, std::move(model), std::move(opt), cfg, nullptr);
}

void write_runlog_csv(std::ostream& os, const RunLog& log) {
  const std::size_t classes = log.epochs.empty() ? 0 : log.epochs.front().class_accuracy.size();
  os << "epoch,loss";
  for (std::size_t c = 0; c < classes; ++c) os << ",acc_" << c;
  os << ",lr,our_active,perturbed_columns\n";
  const auto old_precision = os.precision(17);
  for (const auto& r : log.epochs) {
    os << r.epoch << ',' << r.loss;
    for (const double a : r.class_accuracy) os << ',' << a;
    os << ',' << r.lr << ',' << (r.our_active ? 1 : 0) << ',' << r.perturbed_columns << '\n';
  }
  os.precision(old_precision);
}

}  // namespace orthotail
