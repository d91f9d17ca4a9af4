// Experiment driver: manifold-shift, train, rif-report, mu-sweep.

#include "orthotail/error.hpp"
#include "orthotail/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  bool force = false;
  std::optional<double> mu;
  std::optional<int> epochs;
  std::optional<int> start_epoch;
  std::vector<double> fractions;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seeds, "Run seed (repeatable)")->take_all();
  cmd->add_flag("--force", f.force, "Overwrite existing outputs");
  cmd->add_option("--mu", f.mu, "OUR perturbation scale");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--start-epoch", f.start_epoch, "First epoch with OUR active");
  cmd->add_option("--fractions", f.fractions, "Shift distances as fractions of lambda_max")->delimiter(',');
}

// flag > file > default
orthotail::ExperimentConfig resolve(const CommonFlags& f) {
  orthotail::ExperimentConfig cfg = f.config.empty() ? orthotail::ExperimentConfig{} : orthotail::load_config(f.config);
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (f.mu) cfg.our.mu = *f.mu;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.start_epoch) cfg.our.start_epoch = *f.start_epoch;
  if (!f.fractions.empty()) cfg.fractions = f.fractions;
  cfg.force = f.force;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal uncertainty representation experiments for long-tailed learning"};
  app.require_subcommand(1);

  CommonFlags shift_flags, train_flags, report_flags, sweep_flags;
  std::string images, labels;
  std::vector<double> shift_fractions;
  auto* shift = app.add_subcommand("manifold-shift", "Shift an image manifold along its orthogonal direction");
  add_common(shift, shift_flags);
  shift->add_option("--images", images, "IDX image file")->check(CLI::ExistingFile);
  shift->add_option("--labels", labels, "IDX label file")->check(CLI::ExistingFile);
  shift->add_option("--shift-fractions", shift_fractions, "Fractions of lambda_max")->delimiter(',');

  auto* train = app.add_subcommand("train", "Train paired plain and OUR models per seed");
  add_common(train, train_flags);

  std::vector<std::string> checkpoints, ck_labels;
  auto* report = app.add_subcommand("rif-report", "Robustness profile and RIF of trained checkpoints");
  add_common(report, report_flags);
  report->add_option("--checkpoint", checkpoints, "Model checkpoint (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--label", ck_labels, "Method label per checkpoint (repeatable)");

  std::vector<double> mu_list;
  auto* sweep = app.add_subcommand("mu-sweep", "One OUR run per mu and seed");
  add_common(sweep, sweep_flags);
  sweep->add_option("--mu-list", mu_list, "Values of mu")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*shift) {
      auto cfg = resolve(shift_flags);
      if (!images.empty() || !labels.empty()) {
        cfg.dataset.kind = "idx";
        cfg.dataset.images = images;
        cfg.dataset.labels = labels;
      }
      if (!shift_fractions.empty()) cfg.shift_fractions = shift_fractions;
      return orthotail::cmd_manifold_shift(cfg);
    }
    if (*train) return orthotail::cmd_train(resolve(train_flags));
    if (*report) {
      if (!ck_labels.empty() && ck_labels.size() != checkpoints.size()) {
        std::cerr << "error: --label must be given once per --checkpoint\n";
        return 2;
      }
      std::vector<orthotail::LabeledCheckpoint> cks;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        cks.push_back({ck_labels.empty() ? "run" + std::to_string(i) : ck_labels[i], checkpoints[i]});
      }
      return orthotail::cmd_rif_report(resolve(report_flags), cks);
    }
    if (*sweep) {
      auto cfg = resolve(sweep_flags);
      if (!mu_list.empty()) cfg.mu_list = mu_list;
      return orthotail::cmd_mu_sweep(cfg);
    }
  } catch (const orthotail::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
