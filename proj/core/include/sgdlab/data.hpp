#pragma once

// Datasets, synthetic generators, label randomization, the random-label
// pretraining corpus, augmentations and CIFAR-10 ingestion.

#include "sgdlab/nn.hpp"
#include "sgdlab/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgdlab {

// Pixel layout is channel-major: feature index = (c * h + row) * w + col.
struct ImageShape {
  int height = 32;
  int width = 32;
  int channels = 3;

  int size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

struct Dataset {
  Matrix features;  // n x d
  std::vector<int> labels;
  int n_classes = 2;
  std::optional<ImageShape> image;  // set for image data
  std::string name;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }

  // Throws ContractViolation if any invariant fails.
  void validate() const;

  Batch rows(std::span<const std::size_t> indices) const;
  Batch as_batch() const { return {features, labels}; }
};

struct GaussianSpec {
  int n_per_class = 50;
  std::array<double, 2> mean_0{-2.0, 0.0};
  std::array<double, 2> mean_1{2.0, 0.0};
  double sigma = 0.5;
  std::uint64_t seed = 0;
};

struct AdvCorpusConfig {
  int replication = 5;       // R
  double zero_out_pct = 10;  // N, percent of coordinates zeroed per replica
  std::uint64_t seed = 0;

  void validate() const;
};

// Labels 0 then 1, n_per_class rows each.
Dataset gen_two_gaussians(const GaussianSpec& g);

Dataset randomize_labels(const Dataset& ds, std::uint64_t seed);

// round-half-up of pct/100 * d
int zero_out_count(double pct, int d);

// R replicas per source row (source-major order). Each replica zeroes
// zero_out_count(N, d) coordinates drawn without replacement and gets a
// uniformly random label. Source labels are ignored.
Dataset build_adversarial_corpus(const Dataset& ds, const AdvCorpusConfig& cfg);

// Originals followed by `copies` noisy versions of every row, in that order.
Dataset augment_gaussian_replicate(const Dataset& ds, int copies, double sigma,
                                   std::uint64_t seed);

// Forced outcome for one image; used by tests to pin the random draws.
struct CropFlipDraw {
  int offset_row = 0;
  int offset_col = 0;
  bool flip = false;
};

// Reflect-pad, crop back to h x w at the drawn offset, optional horizontal flip.
void crop_flip_image(std::span<const double> src, std::span<double> dst, const ImageShape& shape,
                     int pad, const CropFlipDraw& draw);

// Fresh random draw per image.
Batch augment_crop_flip(const Batch& batch, const ImageShape& shape, int pad, Rng& rng);

// Uniform (or class-balanced) sample without replacement.
Dataset subset(const Dataset& ds, std::size_t n, bool balanced, std::uint64_t seed);

// Sample standard deviation of the features of each class, averaged over
// classes and coordinates.
double mean_class_std(const Dataset& ds);

// ---- CIFAR-10 binary batches ----

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarPixels = 3072;

// Undecoded records: one label byte and 3072 channel-major pixel bytes each.
struct CifarRaw {
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> pixels;  // records x 3072

  std::size_t size() const { return labels.size(); }
};

// `name` is used in error messages.
CifarRaw parse_cifar_batch(std::span<const std::uint8_t> bytes, const std::string& name);
CifarRaw read_cifar_batch(const std::filesystem::path& file);
std::vector<std::uint8_t> encode_cifar_batch(const CifarRaw& raw);

struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};

ChannelStats channel_stats(const CifarRaw& raw);

// Pixels scaled to [0,1] then standardized per channel with `stats`.
Dataset decode_cifar(const CifarRaw& raw, const ChannelStats& stats, std::string name);

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Reads data_batch_1..5.bin and test_batch.bin from `dir`.
TrainTest load_cifar10(const std::filesystem::path& dir);

// As load_cifar10, but standardization statistics come from the full training
// set while only the sampled rows are decoded.
TrainTest load_cifar10_subset(const std::filesystem::path& dir, std::size_t n_train,
                              std::size_t n_test, bool balanced, std::uint64_t seed);

}  // namespace sgdlab
