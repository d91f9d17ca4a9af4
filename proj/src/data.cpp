#include "orthotail/data.hpp"

#include "binary_io.hpp"
#include "orthotail/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace orthotail {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr char kDatasetMagic[5] = "OTDS";
constexpr std::uint8_t kDatasetVersion = 1;

// Independent streams derived from one user seed.
constexpr std::uint64_t kMeanStream = 0x6d65616e73ULL;
constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kHeldOutStream = 0x74657374ULL;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

LabeledDataset sample_mixture(const Matrix& means, std::span<const std::size_t> counts, double spread,
                              std::uint64_t seed, std::string provenance) {
  std::size_t total = 0;
  for (const auto c : counts) total += c;
  const Eigen::Index dim = means.rows();
  Matrix x(dim, static_cast<Eigen::Index>(total));
  std::vector<Label> labels;
  labels.reserve(total);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t k = 0; k < counts[c]; ++k, ++col) {
      for (Eigen::Index r = 0; r < dim; ++r) x(r, col) = means(r, static_cast<Eigen::Index>(c)) + spread * normal(rng);
      labels.push_back(static_cast<Label>(c));
    }
  }
  return LabeledDataset::from_samples(SampleMatrix(std::move(x), std::move(labels)), static_cast<int>(counts.size()),
                                      std::move(provenance));
}

std::string synth_provenance(const SynthSpec& s, const char* kind) {
  std::ostringstream os;
  os << kind << ":C=" << s.num_classes << ";d=" << s.dim << ";n_max=" << s.n_max << ";IF=" << s.imbalance
     << ";spread=" << s.cluster_spread << ";seed=" << s.seed;
  return os.str();
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& what) {
  require(b.size() >= off + 4, ErrorCode::kTruncatedFile, what + " header truncated");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace

LabeledDataset LabeledDataset::from_samples(SampleMatrix samples, int num_classes, std::string provenance) {
  require(samples.has_labels(), ErrorCode::kLengthMismatch, "dataset requires labels");
  require(num_classes >= 1, ErrorCode::kConfigInvalid, "dataset needs at least one class");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const Label y : samples.labels()) {
    require(y >= 0 && y < num_classes, ErrorCode::kLabelOutOfRange, "label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  return {std::move(samples), num_classes, std::move(counts), std::move(provenance), 0, 0};
}

std::vector<std::size_t> longtail_counts(int num_classes, std::size_t n_max, double imbalance) {
  require(num_classes >= 2, ErrorCode::kConfigInvalid, "long-tail profile needs C >= 2");
  require(std::isfinite(imbalance) && imbalance >= 1.0, ErrorCode::kInvalidIF, "imbalance factor must be >= 1");
  std::vector<std::size_t> counts;
  for (int i = 0; i < num_classes; ++i) {
    const double exponent = -static_cast<double>(i) / static_cast<double>(num_classes - 1);
    const double n = std::round(static_cast<double>(n_max) * std::pow(imbalance, exponent));
    require(n >= 1.0, ErrorCode::kTooFewSamples, "class " + std::to_string(i) + " rounds to zero samples");
    counts.push_back(static_cast<std::size_t>(n));
  }
  return counts;
}

Matrix sphere_class_means(int num_classes, Eigen::Index dim, std::uint64_t seed) {
  require(num_classes >= 1 && dim >= 1, ErrorCode::kConfigInvalid, "means need positive C and d");
  std::mt19937_64 rng(mix_seed(seed, kMeanStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(dim, num_classes);
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    do {
      for (Eigen::Index r = 0; r < dim; ++r) means(r, c) = normal(rng);
      norm = means.col(c).norm();
    } while (norm < 1e-12);
    means.col(c) /= norm;
  }
  return means;
}

LabeledDataset synth_gaussian_longtail(const SynthSpec& spec) {
  require(spec.n_max >= static_cast<std::size_t>(std::max(spec.num_classes, 0)), ErrorCode::kTooFewSamples,
          "n_max must be at least C");
  require(spec.cluster_spread >= 0.0, ErrorCode::kConfigInvalid, "cluster spread must be non-negative");
  const auto counts = longtail_counts(spec.num_classes, spec.n_max, spec.imbalance);
  return sample_mixture(sphere_class_means(spec.num_classes, spec.dim, spec.seed), counts, spec.cluster_spread,
                        mix_seed(spec.seed, kTrainStream), synth_provenance(spec, "synthetic-longtail"));
}

LabeledDataset synth_gaussian_balanced(const SynthSpec& spec, std::size_t per_class) {
  require(per_class >= 1, ErrorCode::kTooFewSamples, "per_class must be positive");
  const std::vector<std::size_t> counts(static_cast<std::size_t>(spec.num_classes), per_class);
  return sample_mixture(sphere_class_means(spec.num_classes, spec.dim, spec.seed), counts, spec.cluster_spread,
                        mix_seed(spec.seed, kHeldOutStream), synth_provenance(spec, "synthetic-balanced"));
}

Subsample subsample_longtail(const LabeledDataset& balanced, double imbalance, std::uint64_t seed) {
  const auto [lo, hi] = std::minmax_element(balanced.counts.begin(), balanced.counts.end());
  require(lo != balanced.counts.end(), ErrorCode::kEmptyCounts, "dataset has no classes");
  require(*hi - *lo <= 1, ErrorCode::kConfigInvalid, "input dataset is not balanced within one sample");
  const auto targets = longtail_counts(balanced.num_classes, *lo, imbalance);

  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(balanced.num_classes));
  const auto& labels = balanced.samples.labels();
  for (Eigen::Index j = 0; j < balanced.size(); ++j) by_class[static_cast<std::size_t>(labels[j])].push_back(j);

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> selected;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    selected.insert(selected.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(targets[c]));
  }
  std::sort(selected.begin(), selected.end());

  std::ostringstream prov;
  prov << "subsample:IF=" << imbalance << ";seed=" << seed << ";of=" << balanced.provenance;
  auto ds = LabeledDataset::from_samples(balanced.samples.select(selected), balanced.num_classes, prov.str());
  return {std::move(ds), std::move(selected)};
}

LabeledDataset load_idx_images(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  require(be32(img, 0, "image file") == kIdxImageMagic, ErrorCode::kBadMagic, "image file magic is not 0x00000803");
  require(be32(lab, 0, "label file") == kIdxLabelMagic, ErrorCode::kBadMagic, "label file magic is not 0x00000801");
  const std::uint32_t count = be32(img, 4, "image file");
  const std::uint32_t rows = be32(img, 8, "image file");
  const std::uint32_t cols = be32(img, 12, "image file");
  const std::uint32_t label_count = be32(lab, 4, "label file");
  require(count == label_count, ErrorCode::kCountMismatch,
          std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  require(count >= 1, ErrorCode::kEmptyMatrix, "IDX file holds no images");

  const std::size_t pixels = std::size_t{rows} * cols;
  require(img.size() >= 16 + pixels * count, ErrorCode::kTruncatedFile, "image payload truncated");
  require(lab.size() >= 8 + std::size_t{count}, ErrorCode::kTruncatedFile, "label payload truncated");

  Matrix x(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  std::vector<Label> labels(count);
  int classes = 0;
  for (std::uint32_t n = 0; n < count; ++n) {
    for (std::size_t p = 0; p < pixels; ++p) {
      x(static_cast<Eigen::Index>(p), n) = static_cast<double>(img[16 + n * pixels + p]) / 255.0;
    }
    labels[n] = lab[8 + n];
    classes = std::max(classes, labels[n] + 1);
  }

  std::ostringstream prov;
  prov << "idx:" << images_path.filename().string() << ";fnv1a=" << std::hex << std::setw(16) << std::setfill('0')
       << fnv1a(img) << ";" << labels_path.filename().string() << ";fnv1a=" << std::setw(16) << fnv1a(lab);
  auto ds = LabeledDataset::from_samples(SampleMatrix(std::move(x), std::move(labels)), classes, prov.str());
  ds.image_rows = rows;
  ds.image_cols = cols;
  return ds;
}

void write_idx_images(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const IdxImages& images) {
  const std::size_t pixels = std::size_t{images.rows} * images.cols;
  require(pixels > 0 && images.pixels.size() == pixels * images.labels.size(), ErrorCode::kCountMismatch,
          "pixel buffer does not match rows * cols * label count");
  const auto count = static_cast<std::uint32_t>(images.labels.size());
  {
    std::ofstream os(images_path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + images_path.string());
    detail::write_be<std::uint32_t>(os, kIdxImageMagic);
    detail::write_be<std::uint32_t>(os, count);
    detail::write_be<std::uint32_t>(os, images.rows);
    detail::write_be<std::uint32_t>(os, images.cols);
    os.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
    require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + images_path.string());
  }
  std::ofstream os(labels_path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + labels_path.string());
  detail::write_be<std::uint32_t>(os, kIdxLabelMagic);
  detail::write_be<std::uint32_t>(os, count);
  os.write(reinterpret_cast<const char*>(images.labels.data()), static_cast<std::streamsize>(images.labels.size()));
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + labels_path.string());
}

void save_dataset(std::ostream& os, const LabeledDataset& ds) {
  detail::write_magic(os, kDatasetMagic);
  detail::write_le<std::uint8_t>(os, kDatasetVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.num_classes));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.dim()));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(ds.size()));
  for (const auto c : ds.counts) detail::write_le<std::uint64_t>(os, c);
  const Matrix& x = ds.samples.data();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) detail::write_le<double>(os, x(i, j));
  }
  for (const Label y : ds.samples.labels()) detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(y));
  require(static_cast<bool>(os), ErrorCode::kIo, "failed writing dataset");
}

LabeledDataset load_dataset(std::istream& is) {
  detail::expect_magic(is, kDatasetMagic, "dataset");
  const auto version = detail::read_le<std::uint8_t>(is, "dataset version");
  require(version == kDatasetVersion, ErrorCode::kBadMagic, "unsupported dataset version");
  const auto classes = detail::read_le<std::uint32_t>(is, "class count");
  const auto dim = detail::read_le<std::uint32_t>(is, "dimension");
  const auto n = detail::read_le<std::uint64_t>(is, "sample count");
  std::vector<std::size_t> counts;
  for (std::uint32_t c = 0; c < classes; ++c) counts.push_back(detail::read_le<std::uint64_t>(is, "class counts"));
  Matrix x(dim, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = detail::read_le<double>(is, "samples");
  }
  std::vector<Label> labels(n);
  for (auto& y : labels) y = detail::read_le<std::uint16_t>(is, "labels");
  auto ds = LabeledDataset::from_samples(SampleMatrix(std::move(x), std::move(labels)), static_cast<int>(classes),
                                         "dataset-file");
  require(ds.counts == counts, ErrorCode::kCountMismatch, "stored class counts disagree with labels");
  return ds;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& ds) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot open " + path.string());
  save_dataset(os, ds);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot open " + path.string());
  auto ds = load_dataset(is);
  ds.provenance = "dataset-file:" + path.filename().string();
  return ds;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t content_digest(const LabeledDataset& ds) {
  std::ostringstream os;
  save_dataset(os, ds);
  const std::string s = os.str();
  return fnv1a({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

}  // namespace orthotail
