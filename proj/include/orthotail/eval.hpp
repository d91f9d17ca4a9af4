#pragma once

#include "orthotail/manifold.hpp"
#include "orthotail/model.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace orthotail {

/// Class accuracies on a feature manifold and on its translates along U.
struct RobustnessProfile {
  DistanceSchedule schedule;
  std::vector<double> base_acc;
  /// noisy_acc[l][c]: accuracy of class c at schedule entry l.
  std::vector<std::vector<double>> noisy_acc;
  /// rif[l] for schedule entry l.
  std::vector<double> rif;
};

/// Fraction of L at which a single RIF number is quoted.
inline constexpr double kDefaultRifFraction = 0.02;

/// Per-class accuracy of argmax g(z). Every class must be present.
std::vector<double> class_accuracies(const ClassifierModel& model, const SampleMatrix& features);

double balanced_accuracy(std::span<const double> class_acc);

/// max_i (A_i - A'_i) - min_i (A_i - A'_i).
double rif(std::span<const double> base_acc, std::span<const double> noisy_acc);

RobustnessProfile robustness_profile(const ClassifierModel& model, const SampleMatrix& features,
                                     const OrthoDirection& dir, const DistanceSchedule& schedule);

/// Extracts f(X), derives the uncentered orthogonal direction of those
/// features, and profiles the classifier over `fractions` of lambda_max.
struct FeatureRobustness {
  OrthoDirection direction;
  RobustnessProfile profile;
};
FeatureRobustness evaluate_feature_robustness(const ClassifierModel& model, const SampleMatrix& inputs,
                                              std::span<const double> fractions);

/// L_fraction,class_id,base_acc,noisy_acc,diff
void write_profile_csv(std::ostream& os, const RobustnessProfile& profile);

}  // namespace orthotail
