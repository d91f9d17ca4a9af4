#include "orthotail/experiment.hpp"

#include "orthotail/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace orthotail {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatVersion = "orthotail-run/1";

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorCode::kConfigInvalid, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(known, ErrorCode::kConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigInvalid, std::string("bad value for '") + key + "': " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return os;
}

void write_json(const fs::path& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + path.string());
}

// Creates `dir`; an existing directory is only reused with force.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    require(force, ErrorCode::kIo, dir.string() + " already exists (pass --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json direction_json(const OrthoDirection& d) {
  return {{"lambda_min", d.lambda_min}, {"lambda_max", d.lambda_max}, {"lambda_mean", d.lambda_mean}};
}

json manifest(const ExperimentConfig& cfg, std::uint64_t run_seed, const std::string& method) {
  const RunSeeds s = derive_seeds(run_seed);
  return {{"format", kFormatVersion},
          {"method", method},
          {"config", config_to_json(cfg)},
          {"run_seed", run_seed},
          {"seeds", {{"data", s.data}, {"init", s.init}, {"shuffle", s.shuffle}, {"our", s.our}}}};
}

std::size_t fraction_index(const std::vector<double>& fractions, double f) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (std::abs(fractions[i] - f) < 1e-12) return i;
  }
  return fractions.size();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  require(dataset.kind == "synthetic" || dataset.kind == "idx", ErrorCode::kConfigInvalid,
          "dataset.kind must be 'synthetic' or 'idx'");
  if (dataset.kind == "idx") {
    require(!dataset.images.empty() && !dataset.labels.empty(), ErrorCode::kConfigInvalid,
            "idx dataset needs images and labels paths");
  }
  require(dataset.subsample_imbalance >= 1.0, ErrorCode::kInvalidIF, "subsample_imbalance must be >= 1");
  require(model.feature_dim >= 2, ErrorCode::kConfigInvalid, "feature_dim must be >= 2");
  for (const auto h : model.hidden) require(h >= 1, ErrorCode::kConfigInvalid, "hidden sizes must be positive");
  require(train.epochs >= 0 && train.batch_size >= 1, ErrorCode::kConfigInvalid, "bad epochs or batch size");
  require(schedule.base_lr > 0.0 && schedule.warmup_epochs >= 0, ErrorCode::kConfigInvalid, "bad learning rate");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kConfigInvalid, "momentum must lie in [0, 1)");
  our.validate();
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    require(fractions[i] >= 0.0 && (i == 0 || fractions[i] > fractions[i - 1]), ErrorCode::kNonAscending,
            "fractions must be non-negative and strictly ascending");
  }
  for (std::size_t i = 0; i < shift_fractions.size(); ++i) {
    require(shift_fractions[i] >= 0.0 && (i == 0 || shift_fractions[i] > shift_fractions[i - 1]),
            ErrorCode::kNonAscending, "shift_fractions must be non-negative and strictly ascending");
  }
  require(!seeds.empty(), ErrorCode::kConfigInvalid, "at least one seed is required");
  for (const double mu : mu_list) require(mu >= 0.0, ErrorCode::kNegativeMu, "mu_list entries must be >= 0");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, {"dataset", "model", "optim", "our", "fractions", "shift_fractions", "grid_images", "seeds", "mu_list",
                 "out"},
             "config");
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, {"kind", "num_classes", "dim", "n_max", "imbalance", "cluster_spread", "test_per_class", "images",
                   "labels", "subsample_imbalance"},
               "dataset");
    read_opt(d, "kind", cfg.dataset.kind);
    read_opt(d, "num_classes", cfg.dataset.synth.num_classes);
    read_opt(d, "dim", cfg.dataset.synth.dim);
    read_opt(d, "n_max", cfg.dataset.synth.n_max);
    read_opt(d, "imbalance", cfg.dataset.synth.imbalance);
    read_opt(d, "cluster_spread", cfg.dataset.synth.cluster_spread);
    read_opt(d, "test_per_class", cfg.dataset.test_per_class);
    read_opt(d, "images", cfg.dataset.images);
    read_opt(d, "labels", cfg.dataset.labels);
    read_opt(d, "subsample_imbalance", cfg.dataset.subsample_imbalance);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"hidden", "feature_dim"}, "model");
    read_opt(m, "hidden", cfg.model.hidden);
    read_opt(m, "feature_dim", cfg.model.feature_dim);
  }
  if (j.contains("optim")) {
    const json& o = j.at("optim");
    check_keys(o, {"epochs", "batch_size", "base_lr", "warmup_epochs", "milestones", "decay", "momentum"}, "optim");
    read_opt(o, "epochs", cfg.train.epochs);
    read_opt(o, "batch_size", cfg.train.batch_size);
    read_opt(o, "base_lr", cfg.schedule.base_lr);
    read_opt(o, "warmup_epochs", cfg.schedule.warmup_epochs);
    read_opt(o, "milestones", cfg.schedule.milestones);
    read_opt(o, "decay", cfg.schedule.decay);
    read_opt(o, "momentum", cfg.momentum);
  }
  if (j.contains("our")) {
    const json& o = j.at("our");
    check_keys(o, {"mu", "tail_threshold_ratio", "start_epoch"}, "our");
    read_opt(o, "mu", cfg.our.mu);
    read_opt(o, "tail_threshold_ratio", cfg.our.tail_threshold_ratio);
    read_opt(o, "start_epoch", cfg.our.start_epoch);
  }
  read_opt(j, "fractions", cfg.fractions);
  read_opt(j, "shift_fractions", cfg.shift_fractions);
  read_opt(j, "grid_images", cfg.grid_images);
  read_opt(j, "seeds", cfg.seeds);
  read_opt(j, "mu_list", cfg.mu_list);
  read_opt(j, "out", cfg.out);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.dataset.synth;
  return {{"dataset",
           {{"kind", cfg.dataset.kind},
            {"num_classes", s.num_classes},
            {"dim", s.dim},
            {"n_max", s.n_max},
            {"imbalance", s.imbalance},
            {"cluster_spread", s.cluster_spread},
            {"test_per_class", cfg.dataset.test_per_class},
            {"images", cfg.dataset.images},
            {"labels", cfg.dataset.labels},
            {"subsample_imbalance", cfg.dataset.subsample_imbalance}}},
          {"model", {{"hidden", cfg.model.hidden}, {"feature_dim", cfg.model.feature_dim}}},
          {"optim",
           {{"epochs", cfg.train.epochs},
            {"batch_size", cfg.train.batch_size},
            {"base_lr", cfg.schedule.base_lr},
            {"warmup_epochs", cfg.schedule.warmup_epochs},
            {"milestones", cfg.schedule.milestones},
            {"decay", cfg.schedule.decay},
            {"momentum", cfg.momentum}}},
          {"our",
           {{"mu", cfg.our.mu},
            {"tail_threshold_ratio", cfg.our.tail_threshold_ratio},
            {"start_epoch", cfg.our.start_epoch}}},
          {"fractions", cfg.fractions},
          {"shift_fractions", cfg.shift_fractions},
          {"grid_images", cfg.grid_images},
          {"seeds", cfg.seeds},
          {"mu_list", cfg.mu_list},
          {"out", cfg.out}};
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfigInvalid, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

RunSeeds derive_seeds(std::uint64_t run_seed) {
  const std::uint64_t base = splitmix(run_seed);
  return {run_seed, splitmix(base ^ 1), splitmix(base ^ 2), splitmix(base ^ 3)};
}

ExperimentData make_data(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  const RunSeeds seeds = derive_seeds(run_seed);
  if (cfg.dataset.kind == "idx") {
    LabeledDataset ds = load_idx_images(cfg.dataset.images, cfg.dataset.labels);
    if (cfg.dataset.subsample_imbalance > 1.0) {
      const auto rows = ds.image_rows;
      const auto cols = ds.image_cols;
      ds = subsample_longtail(ds, cfg.dataset.subsample_imbalance, seeds.data).dataset;
      ds.image_rows = rows;
      ds.image_cols = cols;
    }
    return {std::move(ds), std::nullopt};
  }
  SynthSpec spec = cfg.dataset.synth;
  spec.seed = seeds.data;
  ExperimentData out{synth_gaussian_longtail(spec), std::nullopt};
  if (cfg.dataset.test_per_class > 0) out.test = synth_gaussian_balanced(spec, cfg.dataset.test_per_class);
  return out;
}

ClassifierModel make_model(const ExperimentConfig& cfg, const LabeledDataset& data, std::uint64_t run_seed) {
  std::vector<Eigen::Index> dims{data.dim()};
  dims.insert(dims.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  dims.push_back(cfg.model.feature_dim);
  return ClassifierModel::init_uniform(std::move(dims), data.num_classes, derive_seeds(run_seed).init);
}

RunOutcome run_single(const ExperimentConfig& cfg, const ExperimentData& data, std::uint64_t run_seed, bool use_our) {
  const RunSeeds seeds = derive_seeds(run_seed);
  TrainConfig tc = cfg.train;
  tc.shuffle_seed = seeds.shuffle;
  OptimizerState opt{cfg.schedule, cfg.momentum, {}};
  ClassifierModel model = make_model(cfg, data.train, run_seed);

  auto trained = [&]() {
    if (!use_our) return plain_train_run(data.train, std::move(model), std::move(opt), tc);
    OurConfig our = cfg.our;
    our.seed = seeds.our;
    return train_run(data.train, std::move(model), std::move(opt), tc, our);
  };
  RunOutcome out{trained(), {}, {}, 0.0, 0.0};
  out.robustness = evaluate_feature_robustness(out.train.model, data.train.samples, cfg.fractions);
  out.train_class_acc = out.robustness.profile.base_acc;
  out.train_balanced_acc = balanced_accuracy(out.train_class_acc);
  out.test_balanced_acc = std::numeric_limits<double>::quiet_NaN();
  if (data.test) {
    const auto acc = class_accuracies(out.train.model, forward_features(out.train.model, data.test->samples));
    out.test_balanced_acc = balanced_accuracy(acc);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void write_pgm(const fs::path& path, const Matrix& tiles, std::uint32_t rows, std::uint32_t cols) {
  require(tiles.rows() == static_cast<Eigen::Index>(rows) * cols, ErrorCode::kDimensionMismatch,
          "image columns do not match rows * cols");
  auto os = open_out(path);
  const auto n = static_cast<std::uint32_t>(tiles.cols());
  os << "P5\n" << n * cols << ' ' << rows << "\n255\n";
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t k = 0; k < n; ++k) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        const double v = std::clamp(tiles(static_cast<Eigen::Index>(r * cols + c), k), 0.0, 1.0);
        os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + path.string());
}

int cmd_manifold_shift(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.dataset.kind == "idx", ErrorCode::kConfigInvalid, "manifold-shift needs an idx image dataset");
  const ExperimentData data = make_data(cfg, cfg.seeds.front());
  const LabeledDataset& ds = data.train;
  const fs::path dir = fs::path(cfg.out) / "manifold_shift";
  prepare_dir(dir, cfg.force);

  const OrthoDirection u = orthogonal_direction(ds.samples, /*centered=*/true);
  const DistanceSchedule schedule = build_schedule(u, cfg.shift_fractions);
  const auto shown = static_cast<Eigen::Index>(std::min<std::size_t>(cfg.grid_images, ds.size()));
  write_pgm(dir / "originals.pgm", ds.samples.data().leftCols(shown), ds.image_rows, ds.image_cols);

  auto csv = open_out(dir / "deviation.csv");
  csv << "L_fraction,L,mean_abs_pixel_deviation,max_displacement_error\n";
  json grids = json::array();
  for (std::size_t i = 0; i < schedule.distances.size(); ++i) {
    const double distance = schedule.distances[i];
    const SampleMatrix shifted = shift_manifold(ds.samples, u, distance);
    const Matrix delta = shifted.data() - ds.samples.data();
    const double deviation = delta.cwiseAbs().mean();
    const double displacement_error = (delta.colwise().norm().array() - distance).abs().maxCoeff();
    csv << fmt(schedule.fractions[i]) << ',' << fmt(distance) << ',' << fmt(deviation) << ','
        << fmt(displacement_error) << '\n';
    const std::string name = "grid_" + std::to_string(i) + ".pgm";
    write_pgm(dir / name, shifted.data().leftCols(shown), ds.image_rows, ds.image_cols);
    grids.push_back({{"file", name}, {"L_fraction", schedule.fractions[i]}, {"L", distance}});
  }
  require(static_cast<bool>(csv), ErrorCode::kIo, "failed writing deviation.csv");

  json m = manifest(cfg, cfg.seeds.front(), "manifold-shift");
  m["provenance"] = ds.provenance;
  m["direction"] = direction_json(u);
  m["grids"] = grids;
  write_json(dir / "manifest.json", m);
  return 0;
}

namespace {

void write_run_dir(const fs::path& dir, const ExperimentConfig& cfg, std::uint64_t seed, const std::string& method,
                   const RunOutcome& run, const std::string& provenance) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "runlog.csv");
    write_runlog_csv(os, run.train.log);
    require(static_cast<bool>(os), ErrorCode::kIo, "failed writing runlog.csv");
  }
  run.train.model.save(dir / "model.ckpt");
  json m = manifest(cfg, seed, method);
  m["provenance"] = provenance;
  m["checkpoint"] = "model.ckpt";
  json arts = json::array();
  for (const auto& a : run.train.log.artifacts) {
    json e = direction_json(a.direction);
    e["epoch"] = a.epoch;
    e["sample_count"] = a.sample_count;
    arts.push_back(e);
  }
  m["artifacts"] = arts;
  m["train_balanced_acc"] = run.train_balanced_acc;
  if (!std::isnan(run.test_balanced_acc)) m["test_balanced_acc"] = run.test_balanced_acc;
  const auto& prof = run.robustness.profile;
  m["rif"] = json::array();
  for (std::size_t i = 0; i < prof.rif.size(); ++i) {
    m["rif"].push_back({{"L_fraction", prof.schedule.fractions[i]}, {"rif", prof.rif[i]}});
  }
  write_json(dir / "manifest.json", m);
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  for (const auto seed : cfg.seeds) {
    const fs::path seed_dir = fs::path(cfg.out) / ("seed_" + std::to_string(seed));
    prepare_dir(seed_dir, cfg.force);
    const ExperimentData data = make_data(cfg, seed);
    for (const bool use_our : {false, true}) {
      const std::string method = use_our ? "our" : "plain";
      const RunOutcome run = run_single(cfg, data, seed, use_our);
      write_run_dir(seed_dir / method, cfg, seed, method, run, data.train.provenance);
      std::cerr << "seed " << seed << ' ' << method << ": train balanced acc " << run.train_balanced_acc << '\n';
    }
  }
  return 0;
}

int cmd_rif_report(const ExperimentConfig& cfg, const std::vector<LabeledCheckpoint>& checkpoints) {
  cfg.validate();
  require(!checkpoints.empty(), ErrorCode::kConfigInvalid, "rif-report needs at least one checkpoint");
  const fs::path dir = fs::path(cfg.out) / "rif_report";
  prepare_dir(dir, cfg.force);
  const ExperimentData data = make_data(cfg, cfg.seeds.front());

  auto curve = open_out(dir / "rif_curve.csv");
  curve << "method,L_fraction,L,rif\n";
  json summary = {{"format", kFormatVersion}, {"config", config_to_json(cfg)}, {"reports", json::array()}};
  for (const auto& ck : checkpoints) {
    const ClassifierModel model = ClassifierModel::load(ck.path);
    require(model.input_dim() == data.train.dim(), ErrorCode::kDimensionMismatch,
            "checkpoint " + ck.path.string() + " expects input dim " + std::to_string(model.input_dim()));
    require(model.num_classes() == data.train.num_classes, ErrorCode::kDimensionMismatch,
            "checkpoint " + ck.path.string() + " has a different class count");
    const FeatureRobustness fr = evaluate_feature_robustness(model, data.train.samples, cfg.fractions);
    const auto& prof = fr.profile;
    {
      auto os = open_out(dir / ("profile_" + ck.label + ".csv"));
      write_profile_csv(os, prof);
    }
    json per_l = json::array();
    for (std::size_t i = 0; i < prof.rif.size(); ++i) {
      std::vector<double> diff(prof.base_acc.size());
      for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = prof.base_acc[c] - prof.noisy_acc[i][c];
      const auto hi = std::max_element(diff.begin(), diff.end()) - diff.begin();
      const auto lo = std::min_element(diff.begin(), diff.end()) - diff.begin();
      per_l.push_back({{"L_fraction", prof.schedule.fractions[i]},
                       {"L", prof.schedule.distances[i]},
                       {"rif", prof.rif[i]},
                       {"argmax_class", hi},
                       {"argmin_class", lo}});
      curve << csv_field(ck.label) << ',' << fmt(prof.schedule.fractions[i]) << ',' << fmt(prof.schedule.distances[i])
            << ',' << fmt(prof.rif[i]) << '\n';
    }
    json rep = {{"label", ck.label},
                {"checkpoint", ck.path.string()},
                {"direction", direction_json(fr.direction)},
                {"base_acc", prof.base_acc},
                {"per_L", per_l}};
    const std::size_t q = fraction_index(prof.schedule.fractions, kDefaultRifFraction);
    if (q < prof.rif.size()) rep["rif_default"] = prof.rif[q];
    summary["reports"].push_back(rep);
  }
  require(static_cast<bool>(curve), ErrorCode::kIo, "failed writing rif_curve.csv");
  write_json(dir / "rif_summary.json", summary);
  return 0;
}

int cmd_mu_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  require(!cfg.mu_list.empty(), ErrorCode::kConfigInvalid, "mu_list is empty");
  const fs::path dir = fs::path(cfg.out) / "mu_sweep";
  prepare_dir(dir, cfg.force);
  const std::size_t q = fraction_index(cfg.fractions, kDefaultRifFraction);

  auto table = open_out(dir / "mu_sweep.csv");
  table << "mu,seed,train_balanced_acc,test_balanced_acc,rif_default\n";
  std::vector<double> train_sum(cfg.mu_list.size(), 0.0);
  std::vector<double> test_sum(cfg.mu_list.size(), 0.0);
  for (const auto seed : cfg.seeds) {
    const ExperimentData data = make_data(cfg, seed);
    for (std::size_t i = 0; i < cfg.mu_list.size(); ++i) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.our.mu = cfg.mu_list[i];
      const RunOutcome run = run_single(run_cfg, data, seed, /*use_our=*/true);
      const auto& rifs = run.robustness.profile.rif;
      table << fmt(cfg.mu_list[i]) << ',' << seed << ',' << fmt(run.train_balanced_acc) << ','
            << (std::isnan(run.test_balanced_acc) ? "" : fmt(run.test_balanced_acc)) << ','
            << (q < rifs.size() ? fmt(rifs[q]) : "") << '\n';
      train_sum[i] += run.train_balanced_acc;
      test_sum[i] += run.test_balanced_acc;
    }
  }
  require(static_cast<bool>(table), ErrorCode::kIo, "failed writing mu_sweep.csv");

  auto summary = open_out(dir / "mu_summary.csv");
  summary << "mu,mean_train_balanced_acc,mean_test_balanced_acc\n";
  const double n = static_cast<double>(cfg.seeds.size());
  for (std::size_t i = 0; i < cfg.mu_list.size(); ++i) {
    summary << fmt(cfg.mu_list[i]) << ',' << fmt(train_sum[i] / n) << ','
            << (std::isnan(test_sum[i]) ? "" : fmt(test_sum[i] / n)) << '\n';
  }
  json m = manifest(cfg, cfg.seeds.front(), "mu-sweep");
  m["seeds_run"] = cfg.seeds;
  write_json(dir / "manifest.json", m);
  return 0;
}

}  // namespace orthotail
