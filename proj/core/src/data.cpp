#include "sgdlab/data.hpp"

#include "sgdlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace sgdlab {

void Dataset::validate() const {
  if (labels.empty()) throw ContractViolation(fmt::format("dataset '{}' is empty", name));
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ContractViolation(fmt::format("dataset '{}': {} feature rows vs {} labels", name,
                                        features.rows(), labels.size()));
  }
  if (n_classes < 2) throw ContractViolation("dataset needs at least two classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw ContractViolation(fmt::format("dataset '{}': label {} at row {} out of range", name,
                                          labels[i], i));
    }
  }
  if (image && image->size() != dim()) {
    throw ContractViolation(fmt::format("dataset '{}': image shape {}x{}x{} does not match d={}",
                                        name, image->height, image->width, image->channels,
                                        dim()));
  }
  if (!features.allFinite()) {
    throw ContractViolation(fmt::format("dataset '{}' has non-finite features", name));
  }
}

Batch Dataset::rows(std::span<const std::size_t> indices) const {
  Batch b{Matrix(static_cast<Eigen::Index>(indices.size()), features.cols()), {}};
  b.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    b.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(indices[i]));
    b.labels.push_back(labels[indices[i]]);
  }
  return b;
}

void AdvCorpusConfig::validate() const {
  if (replication < 1) throw ContractViolation("replication factor R must be >= 1");
  if (!(zero_out_pct >= 0.0 && zero_out_pct <= 100.0)) {
    throw ContractViolation("zero-out factor N must lie in [0, 100]");
  }
}

Dataset gen_two_gaussians(const GaussianSpec& g) {
  if (g.n_per_class < 1) throw ContractViolation("n_per_class must be >= 1");
  if (!(g.sigma > 0.0)) throw ContractViolation("sigma must be > 0");
  if (g.mean_0 == g.mean_1) throw ContractViolation("class means must differ");

  Rng rng = make_rng(g.seed);
  Dataset ds;
  ds.name = "toy-gaussians";
  ds.n_classes = 2;
  ds.features.resize(2 * g.n_per_class, 2);
  ds.labels.reserve(static_cast<std::size_t>(2 * g.n_per_class));
  for (int k = 0; k < 2; ++k) {
    const auto& mean = k == 0 ? g.mean_0 : g.mean_1;
    for (int i = 0; i < g.n_per_class; ++i) {
      const Eigen::Index row = k * g.n_per_class + i;
      ds.features(row, 0) = mean[0] + g.sigma * standard_normal(rng);
      ds.features(row, 1) = mean[1] + g.sigma * standard_normal(rng);
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Dataset randomize_labels(const Dataset& ds, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Dataset out = ds;
  for (auto& y : out.labels) {
    y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(ds.n_classes)));
  }
  out.name = ds.name + "/random-labels";
  return out;
}

int zero_out_count(double pct, int d) {
  return static_cast<int>(std::floor(pct * d / 100.0 + 0.5));
}

Dataset build_adversarial_corpus(const Dataset& ds, const AdvCorpusConfig& cfg) {
  cfg.validate();
  ds.validate();
  const int d = ds.dim();
  const int zeroed = zero_out_count(cfg.zero_out_pct, d);
  const auto n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index R = cfg.replication;

  Rng rng = make_rng(cfg.seed);
  Dataset out;
  out.name = ds.name + "/adversarial-corpus";
  out.n_classes = ds.n_classes;
  out.image = ds.image;
  out.features.resize(n * R, d);
  out.labels.resize(static_cast<std::size_t>(n * R));

  std::vector<int> coords(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < R; ++r) {
      const Eigen::Index row = i * R + r;
      out.features.row(row) = ds.features.row(i);
      // Partial Fisher-Yates: the first `zeroed` slots form a uniform subset.
      std::iota(coords.begin(), coords.end(), 0);
      for (int j = 0; j < zeroed; ++j) {
        const auto pick = j + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(d - j)));
        std::swap(coords[static_cast<std::size_t>(j)], coords[static_cast<std::size_t>(pick)]);
        out.features(row, coords[static_cast<std::size_t>(j)]) = 0.0;
      }
      out.labels[static_cast<std::size_t>(row)] =
          static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(ds.n_classes)));
    }
  }
  return out;
}

Dataset augment_gaussian_replicate(const Dataset& ds, int copies, double sigma,
                                   std::uint64_t seed) {
  if (copies < 1) throw ContractViolation("gaussian replicate: copies must be >= 1");
  if (!(sigma > 0.0)) throw ContractViolation("gaussian replicate: sigma must be > 0");
  Rng rng = make_rng(seed);
  const auto n = static_cast<Eigen::Index>(ds.size());
  Dataset out;
  out.name = ds.name + "/gaussian-replicate";
  out.n_classes = ds.n_classes;
  out.image = ds.image;
  out.features.resize(n * (copies + 1), ds.features.cols());
  out.features.topRows(n) = ds.features;
  out.labels = ds.labels;
  out.labels.reserve(static_cast<std::size_t>(n * (copies + 1)));
  for (int c = 0; c < copies; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = (c + 1) * n + i;
      for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
        out.features(row, j) = ds.features(i, j) + sigma * standard_normal(rng);
      }
      out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

void crop_flip_image(std::span<const double> src, std::span<double> dst, const ImageShape& shape,
                     int pad, const CropFlipDraw& draw) {
  const int h = shape.height;
  const int w = shape.width;
  // Reflect without repeating the edge pixel: index -1 maps to 1.
  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  for (int c = 0; c < shape.channels; ++c) {
    for (int r = 0; r < h; ++r) {
      const int src_r = reflect(r + draw.offset_row - pad, h);
      for (int col = 0; col < w; ++col) {
        const int out_col = draw.flip ? w - 1 - col : col;
        const int src_c = reflect(col + draw.offset_col - pad, w);
        dst[static_cast<std::size_t>((c * h + r) * w + out_col)] =
            src[static_cast<std::size_t>((c * h + src_r) * w + src_c)];
      }
    }
  }
}

Batch augment_crop_flip(const Batch& batch, const ImageShape& shape, int pad, Rng& rng) {
  if (pad < 0) throw ContractViolation("crop-flip: pad must be >= 0");
  if (batch.features.cols() != shape.size()) {
    throw ContractViolation("crop-flip requires image data matching the image shape");
  }
  Batch out{Matrix(batch.features.rows(), batch.features.cols()), batch.labels};
  const auto span_of = [&](auto& m, Eigen::Index row) {
    return std::span(m.row(row).data(), static_cast<std::size_t>(m.cols()));
  };
  for (Eigen::Index i = 0; i < batch.features.rows(); ++i) {
    CropFlipDraw draw;
    draw.offset_row = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * pad + 1)));
    draw.offset_col = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * pad + 1)));
    draw.flip = uniform_index(rng, 2) == 1;
    crop_flip_image(span_of(batch.features, i), span_of(out.features, i), shape, pad, draw);
  }
  return out;
}

Dataset subset(const Dataset& ds, std::size_t n, bool balanced, std::uint64_t seed) {
  if (n < 1 || n > ds.size()) {
    throw ContractViolation(fmt::format("subset: n={} must lie in [1, {}]", n, ds.size()));
  }
  Rng rng = make_rng(seed);
  std::vector<std::size_t> picked;
  if (balanced) {
    const auto K = static_cast<std::size_t>(ds.n_classes);
    if (n % K != 0) {
      throw ContractViolation(fmt::format("subset: balanced n={} not divisible by K={}", n, K));
    }
    std::vector<std::vector<std::size_t>> by_class(K);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    for (std::size_t k = 0; k < K; ++k) {
      if (by_class[k].size() < n / K) {
        throw ContractViolation(fmt::format("subset: class {} has only {} rows, need {}", k,
                                            by_class[k].size(), n / K));
      }
      shuffle(std::span(by_class[k]), rng);
      picked.insert(picked.end(), by_class[k].begin(),
                    by_class[k].begin() + static_cast<std::ptrdiff_t>(n / K));
    }
    shuffle(std::span(picked), rng);
  } else {
    picked.resize(ds.size());
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    shuffle(std::span(picked), rng);
    picked.resize(n);
  }
  Batch b = ds.rows(picked);
  Dataset out;
  out.features = std::move(b.features);
  out.labels = std::move(b.labels);
  out.n_classes = ds.n_classes;
  out.image = ds.image;
  out.name = ds.name;
  return out;
}

double mean_class_std(const Dataset& ds) {
  double total = 0.0;
  int terms = 0;
  for (int k = 0; k < ds.n_classes; ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.size() < 2) continue;
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      double mean = 0.0;
      for (auto r : rows) mean += ds.features(r, j);
      mean /= static_cast<double>(rows.size());
      double ss = 0.0;
      for (auto r : rows) ss += (ds.features(r, j) - mean) * (ds.features(r, j) - mean);
      total += std::sqrt(ss / static_cast<double>(rows.size() - 1));
      ++terms;
    }
  }
  if (terms == 0) throw ContractViolation("mean_class_std: need two rows in some class");
  return total / terms;
}

}  // namespace sgdlab
