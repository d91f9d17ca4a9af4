#pragma once

#include "orthotail/augment.hpp"
#include "orthotail/data.hpp"
#include "orthotail/eval.hpp"
#include "orthotail/model.hpp"
#include "orthotail/train.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace orthotail {

struct DatasetConfig {
  /// "synthetic" or "idx".
  std::string kind = "synthetic";
  SynthSpec synth;
  /// Balanced held-out draw per class for synthetic data; 0 disables it.
  std::size_t test_per_class = 200;
  std::string images;
  std::string labels;
  /// Long-tail subsampling of an IDX corpus; 1 keeps it as loaded.
  double subsample_imbalance = 1.0;
};

struct ModelConfig {
  std::vector<Eigen::Index> hidden = {128};
  Eigen::Index feature_dim = 64;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  LrSchedule schedule;
  double momentum = 0.9;
  OurConfig our;
  std::vector<double> fractions = default_fractions();
  std::vector<double> shift_fractions = {0.0, 0.005, 0.01, 0.02};
  std::size_t grid_images = 8;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<double> mu_list = {0.0, 0.01, 0.02, 0.03, 0.05, 0.1};
  std::string out = "runs";
  bool force = false;

  void validate() const;
};

/// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Seeds of one run, all derived from the run seed. Plain and OUR runs of
/// the same run seed share data, init and shuffle seeds.
struct RunSeeds {
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t our = 0;
};
RunSeeds derive_seeds(std::uint64_t run_seed);

struct ExperimentData {
  LabeledDataset train;
  std::optional<LabeledDataset> test;
};
ExperimentData make_data(const ExperimentConfig& cfg, std::uint64_t run_seed);

ClassifierModel make_model(const ExperimentConfig& cfg, const LabeledDataset& data, std::uint64_t run_seed);

struct RunOutcome {
  TrainResult train;
  /// Training-set feature robustness of the final model.
  FeatureRobustness robustness;
  std::vector<double> train_class_acc;
  double train_balanced_acc = 0.0;
  /// Balanced accuracy on the held-out set; NaN when there is none.
  double test_balanced_acc = 0.0;
};

/// Trains one model (plain when `use_our` is false) and evaluates it.
RunOutcome run_single(const ExperimentConfig& cfg, const ExperimentData& data, std::uint64_t run_seed, bool use_our);

/// Commands. Each returns a process exit code and writes under cfg.out.
int cmd_manifold_shift(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
struct LabeledCheckpoint {
  std::string label;
  std::filesystem::path path;
};
int cmd_rif_report(const ExperimentConfig& cfg, const std::vector<LabeledCheckpoint>& checkpoints);
int cmd_mu_sweep(const ExperimentConfig& cfg);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

/// Binary graymap; `pixels` in [0, 1] are clamped and rounded to 0..255.
void write_pgm(const std::filesystem::path& path, const Matrix& tiles, std::uint32_t rows, std::uint32_t cols);

}  // namespace orthotail
