#include "sgdlab/data.hpp"
#include "sgdlab/errors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <iterator>
#include <numeric>

namespace sgdlab {

namespace {

constexpr int kCifarClasses = 10;
constexpr std::size_t kChannelPixels = 1024;

const std::vector<std::string>& train_files() {
  static const std::vector<std::string> files = {"data_batch_1.bin", "data_batch_2.bin",
                                                 "data_batch_3.bin", "data_batch_4.bin",
                                                 "data_batch_5.bin"};
  return files;
}

CifarRaw concat(std::vector<CifarRaw> parts) {
  CifarRaw out;
  for (auto& p : parts) {
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.pixels.insert(out.pixels.end(), p.pixels.begin(), p.pixels.end());
  }
  return out;
}

CifarRaw read_train(const std::filesystem::path& dir) {
  std::vector<CifarRaw> parts;
  for (const auto& f : train_files()) parts.push_back(read_cifar_batch(dir / f));
  return concat(std::move(parts));
}

CifarRaw select(const CifarRaw& raw, std::span<const std::size_t> rows) {
  CifarRaw out;
  out.labels.reserve(rows.size());
  out.pixels.reserve(rows.size() * kCifarPixels);
  for (auto r : rows) {
    out.labels.push_back(raw.labels[r]);
    const auto begin = raw.pixels.begin() + static_cast<std::ptrdiff_t>(r * kCifarPixels);
    out.pixels.insert(out.pixels.end(), begin, begin + static_cast<std::ptrdiff_t>(kCifarPixels));
  }
  return out;
}

// Label-only dataset so the generic subset() picks the rows.
std::vector<std::size_t> pick_rows(const CifarRaw& raw, std::size_t n, bool balanced,
                                   std::uint64_t seed) {
  Dataset index_ds;
  index_ds.n_classes = kCifarClasses;
  index_ds.features.resize(static_cast<Eigen::Index>(raw.size()), 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    index_ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  }
  index_ds.labels.assign(raw.labels.begin(), raw.labels.end());
  const Dataset picked = subset(index_ds, n, balanced, seed);
  std::vector<std::size_t> rows(picked.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = static_cast<std::size_t>(picked.features(static_cast<Eigen::Index>(i), 0));
  }
  return rows;
}

}  // namespace

CifarRaw parse_cifar_batch(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
    throw MalformedFile(name, fmt::format("{}: length {} is not a positive multiple of {}", name,
                                          bytes.size(), kCifarRecordBytes));
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  CifarRaw raw;
  raw.labels.resize(n);
  raw.pixels.resize(n * kCifarPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] >= kCifarClasses) {
      throw CorruptRecord(name, i,
                          fmt::format("{}: record {} has label byte {}", name, i, rec[0]));
    }
    raw.labels[i] = rec[0];
    std::copy_n(rec + 1, kCifarPixels, raw.pixels.begin() + static_cast<std::ptrdiff_t>(i * kCifarPixels));
  }
  return raw;
}

CifarRaw read_cifar_batch(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open CIFAR batch '{}'", file.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_cifar_batch(bytes, file.string());
}

std::vector<std::uint8_t> encode_cifar_batch(const CifarRaw& raw) {
  std::vector<std::uint8_t> out;
  out.reserve(raw.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.push_back(raw.labels[i]);
    const auto begin = raw.pixels.begin() + static_cast<std::ptrdiff_t>(i * kCifarPixels);
    out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(kCifarPixels));
  }
  return out;
}

ChannelStats channel_stats(const CifarRaw& raw) {
  if (raw.size() == 0) throw ContractViolation("channel_stats: no records");
  ChannelStats s;
  const double count = static_cast<double>(raw.size() * kChannelPixels);
  for (std::size_t c = 0; c < 3; ++c) {
    // Integer sums are exact, so the statistics do not depend on record order.
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto* p = raw.pixels.data() + i * kCifarPixels + c * kChannelPixels;
      for (std::size_t j = 0; j < kChannelPixels; ++j) {
        sum += p[j];
        sum_sq += static_cast<std::uint64_t>(p[j]) * p[j];
      }
    }
    const double mean = static_cast<double>(sum) / count;
    const double var = static_cast<double>(sum_sq) / count - mean * mean;
    s.mean[c] = mean / 255.0;
    s.stddev[c] = std::sqrt(std::max(var, 0.0)) / 255.0;
  }
  return s;
}

Dataset decode_cifar(const CifarRaw& raw, const ChannelStats& stats, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  ds.n_classes = kCifarClasses;
  ds.image = ImageShape{32, 32, 3};
  ds.features.resize(static_cast<Eigen::Index>(raw.size()), static_cast<Eigen::Index>(kCifarPixels));
  ds.labels.assign(raw.labels.begin(), raw.labels.end());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      const std::size_t c = j / kChannelPixels;
      const double sd = stats.stddev[c] > 0.0 ? stats.stddev[c] : 1.0;
      const double v = raw.pixels[i * kCifarPixels + j] / 255.0;
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (v - stats.mean[c]) / sd;
    }
  }
  return ds;
}

TrainTest load_cifar10(const std::filesystem::path& dir) {
  const CifarRaw train = read_train(dir);
  const CifarRaw test = read_cifar_batch(dir / "test_batch.bin");
  const ChannelStats stats = channel_stats(train);
  return {decode_cifar(train, stats, "cifar10-train"), decode_cifar(test, stats, "cifar10-test")};
}

TrainTest load_cifar10_subset(const std::filesystem::path& dir, std::size_t n_train,
                              std::size_t n_test, bool balanced, std::uint64_t seed) {
  const CifarRaw train = read_train(dir);
  const CifarRaw test = read_cifar_batch(dir / "test_batch.bin");
  const ChannelStats stats = channel_stats(train);
  const auto train_rows = pick_rows(train, n_train, balanced, derive_seed(seed, 1));
  const auto test_rows = pick_rows(test, n_test, balanced, derive_seed(seed, 2));
  return {decode_cifar(select(train, train_rows), stats, "cifar10-train"),
          decode_cifar(select(test, test_rows), stats, "cifar10-test")};
}

}  // namespace sgdlab
