#pragma once

#include "orthotail/manifold.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace orthotail {

struct LabeledDataset {
  SampleMatrix samples;
  int num_classes = 0;
  std::vector<std::size_t> counts;
  /// Generator parameters or source digest.
  std::string provenance;
  /// Raster shape when columns are images; zero otherwise.
  std::uint32_t image_rows = 0;
  std::uint32_t image_cols = 0;

  Eigen::Index size() const noexcept { return samples.count(); }
  Eigen::Index dim() const noexcept { return samples.dim(); }

  /// Builds counts from labels; labels must lie in [0, num_classes).
  static LabeledDataset from_samples(SampleMatrix samples, int num_classes, std::string provenance);
};

/// N_i = round(n_max * imbalance^(-i / (C - 1))), i = 0..C-1.
std::vector<std::size_t> longtail_counts(int num_classes, std::size_t n_max, double imbalance);

/// Class means drawn uniformly on the unit sphere in d dimensions.
Matrix sphere_class_means(int num_classes, Eigen::Index dim, std::uint64_t seed);

struct SynthSpec {
  int num_classes = 10;
  Eigen::Index dim = 20;
  std::size_t n_max = 500;
  double imbalance = 100.0;
  double cluster_spread = 0.3;
  std::uint64_t seed = 0;
};

/// Long-tailed isotropic Gaussian mixture, columns grouped by class.
LabeledDataset synth_gaussian_longtail(const SynthSpec& spec);

/// Balanced draw from the same class means as synth_gaussian_longtail(spec)
/// but an independent sample stream; for held-out evaluation.
LabeledDataset synth_gaussian_balanced(const SynthSpec& spec, std::size_t per_class);

struct Subsample {
  LabeledDataset dataset;
  /// Indices into the source dataset, ascending.
  std::vector<Eigen::Index> selected;
};

/// Seeded per-class subsample of a (near-)balanced dataset to the long-tail
/// profile with n_max = smallest class count.
Subsample subsample_longtail(const LabeledDataset& balanced, double imbalance, std::uint64_t seed);

/// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian dims).
/// Pixels are scaled to [0, 1].
LabeledDataset load_idx_images(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct IdxImages {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  /// count x (rows * cols) bytes, image-major.
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
};

void write_idx_images(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const IdxImages& images);

/// Binary container: "OTDS", u8 version, u32 C, u32 d, u64 N, u64 counts[C],
/// N*d float64 column-major, u16 labels[N]; little-endian.
void save_dataset(std::ostream& os, const LabeledDataset& ds);
LabeledDataset load_dataset(std::istream& is);
void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// FNV-1a 64-bit digest.
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t content_digest(const LabeledDataset& ds);

}  // namespace orthotail
