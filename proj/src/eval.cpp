#include "orthotail/eval.hpp"

#include "orthotail/error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace orthotail {

std::vector<double> class_accuracies(const ClassifierModel& model, const SampleMatrix& features) {
  require(features.has_labels(), ErrorCode::kLengthMismatch, "class accuracies need labels");
  const Matrix logits = forward_logits(model, features.data());
  const auto classes = static_cast<std::size_t>(model.num_classes());
  std::vector<std::size_t> correct(classes, 0);
  std::vector<std::size_t> seen(classes, 0);
  const auto& labels = features.labels();
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Label y = labels[static_cast<std::size_t>(j)];
    require(y >= 0 && static_cast<std::size_t>(y) < classes, ErrorCode::kLabelOutOfRange,
            "label " + std::to_string(y) + " out of range");
    Eigen::Index pred = 0;
    logits.col(j).maxCoeff(&pred);
    ++seen[static_cast<std::size_t>(y)];
    if (pred == y) ++correct[static_cast<std::size_t>(y)];
  }
  std::vector<double> acc(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    require(seen[c] > 0, ErrorCode::kMissingClass, "class " + std::to_string(c) + " has no samples");
    acc[c] = static_cast<double>(correct[c]) / static_cast<double>(seen[c]);
  }
  return acc;
}

double balanced_accuracy(std::span<const double> class_acc) {
  require(!class_acc.empty(), ErrorCode::kEmpty, "no class accuracies");
  return std::accumulate(class_acc.begin(), class_acc.end(), 0.0) / static_cast<double>(class_acc.size());
}

double rif(std::span<const double> base_acc, std::span<const double> noisy_acc) {
  require(base_acc.size() == noisy_acc.size(), ErrorCode::kLengthMismatch, "accuracy vectors differ in length");
  require(!base_acc.empty(), ErrorCode::kEmpty, "no classes");
  double hi = base_acc[0] - noisy_acc[0];
  double lo = hi;
  for (std::size_t i = 1; i < base_acc.size(); ++i) {
    const double diff = base_acc[i] - noisy_acc[i];
    hi = std::max(hi, diff);
    lo = std::min(lo, diff);
  }
  return hi - lo;
}

RobustnessProfile robustness_profile(const ClassifierModel& model, const SampleMatrix& features,
                                     const OrthoDirection& dir, const DistanceSchedule& schedule) {
  RobustnessProfile p;
  p.schedule = schedule;
  p.base_acc = class_accuracies(model, features);
  for (const double distance : schedule.distances) {
    auto noisy = distance == 0.0 ? p.base_acc : class_accuracies(model, shift_manifold(features, dir.u, distance));
    p.rif.push_back(rif(p.base_acc, noisy));
    p.noisy_acc.push_back(std::move(noisy));
  }
  return p;
}

FeatureRobustness evaluate_feature_robustness(const ClassifierModel& model, const SampleMatrix& inputs,
                                              std::span<const double> fractions) {
  const SampleMatrix features = forward_features(model, inputs);
  FeatureRobustness out;
  out.direction = orthogonal_direction(features, /*centered=*/false);
  out.profile = robustness_profile(model, features, out.direction, build_schedule(out.direction, fractions));
  return out;
}

void write_profile_csv(std::ostream& os, const RobustnessProfile& profile) {
  os << "L_fraction,class_id,base_acc,noisy_acc,diff\n";
  const auto old_precision = os.precision(17);
  for (std::size_t l = 0; l < profile.noisy_acc.size(); ++l) {
    for (std::size_t c = 0; c < profile.base_acc.size(); ++c) {
      const double base = profile.base_acc[c];
      const double noisy = profile.noisy_acc[l][c];
      os << profile.schedule.fractions[l] << ',' << c << ',' << base << ',' << noisy << ',' << base - noisy << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace orthotail
