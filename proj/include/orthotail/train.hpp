#pragma once

#include "orthotail/augment.hpp"
#include "orthotail/data.hpp"
#include "orthotail/manifold.hpp"
#include "orthotail/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace orthotail {

struct TrainConfig {
  int epochs = 60;
  Eigen::Index batch_size = 128;
  std::uint64_t shuffle_seed = 0;
};

/// Orthogonal direction of the feature manifold finalized at the end of
/// `epoch` from that epoch's accumulated (uncentered) feature covariance.
/// `direction.centroid` is left empty.
struct EpochArtifacts {
  int epoch = 0;
  OrthoDirection direction;
  std::uint64_t sample_count = 0;
};

struct EpochRecord {
  int epoch = 0;
  /// Sample-weighted mean of the batch losses.
  double loss = 0.0;
  /// Accuracy of the training-pass predictions, per class.
  std::vector<double> class_accuracy;
  double lr = 0.0;
  /// True iff tail features were perturbed with a nonzero scale.
  bool our_active = false;
  std::size_t perturbed_columns = 0;
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::vector<EpochArtifacts> artifacts;
};

struct TrainResult {
  ClassifierModel model;
  RunLog log;
  std::optional<EpochArtifacts> final_artifacts;
};

/// End-to-end training with orthogonal uncertainty representation. Epochs
/// are 1-based: the feature covariance is accumulated from epoch k-1 on and
/// finalized at each epoch end; from epoch k on, tail-class features of
/// every batch are perturbed along the direction finalized one epoch earlier.
TrainResult train_run(const LabeledDataset& data, ClassifierModel model, OptimizerState opt, const TrainConfig& cfg,
                      const OurConfig& our);

/// Same loop with no accumulation and no perturbation.
TrainResult plain_train_run(const LabeledDataset& data, ClassifierModel model, OptimizerState opt,
                            const TrainConfig& cfg);

/// epoch,loss,acc_0..acc_{C-1},lr,our_active,perturbed_columns
void write_runlog_csv(std::ostream& os, const RunLog& log);

}  // namespace orthotail
