#include "sgdlab/optim.hpp"

#include "sgdlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <numeric>

namespace sgdlab {

namespace {

constexpr std::uint64_t kReplicateStream = 0x5eed'0001;
constexpr std::uint64_t kEpochStream = 0x5eed'0002;

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return derive_seed(h, bits);
}

void axpy_stack(LayerStack& dst, double a, const LayerStack& src) {
  for (std::size_t l = 0; l < dst.size(); ++l) {
    dst[l].weight += a * src[l].weight;
    dst[l].bias += a * src[l].bias;
  }
}

}  // namespace

void LrSchedule::validate() const {
  if (segments.empty()) throw ContractViolation("learning-rate schedule has no segments");
  if (segments.front().start_epoch != 1) {
    throw ContractViolation("learning-rate schedule must start at epoch 1");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].lr >= 0.0) || !std::isfinite(segments[i].lr)) {
      throw ContractViolation(fmt::format("schedule segment {} has a negative or non-finite lr", i));
    }
    if (i > 0 && segments[i].start_epoch <= segments[i - 1].start_epoch) {
      throw ContractViolation("schedule start epochs must be strictly increasing");
    }
  }
}

LrSchedule LrSchedule::cifar() { return {{{1, 0.1}, {151, 0.01}, {251, 0.001}}}; }

double lr_at(const LrSchedule& schedule, int epoch) {
  if (epoch < 1) throw ContractViolation(fmt::format("lr_at: epoch {} < 1", epoch));
  schedule.validate();
  double lr = schedule.segments.front().lr;
  for (const auto& seg : schedule.segments) {
    if (seg.start_epoch > epoch) break;
    lr = seg.lr;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ContractViolation("batch_size must be >= 1");
  schedule.validate();
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractViolation("momentum must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ContractViolation("l2 must be >= 0");
  if (max_epochs < 1) throw ContractViolation("max_epochs must be >= 1");
  if (plateau.window < 1) throw ContractViolation("plateau window must be >= 1");
  if (eval_every < 1) throw ContractViolation("eval_every must be >= 1");
  if (const auto* g = std::get_if<GaussianReplicate>(&augmentation)) {
    if (g->copies < 1 || !(g->sigma > 0.0)) {
      throw ContractViolation("gaussian-replicate needs copies >= 1 and sigma > 0");
    }
  }
  if (const auto* c = std::get_if<CropFlip>(&augmentation); c && c->pad < 0) {
    throw ContractViolation("crop-flip pad must be >= 0");
  }
}

bool TrainConfig::is_vanilla() const {
  return momentum == 0.0 && l2 == 0.0 && std::holds_alternative<NoAugmentation>(augmentation);
}

std::uint64_t TrainConfig::fingerprint() const {
  std::uint64_t h = derive_seed(static_cast<std::uint64_t>(batch_size), schedule.segments.size());
  for (const auto& s : schedule.segments) {
    h = derive_seed(h, static_cast<std::uint64_t>(s.start_epoch));
    h = hash_double(h, s.lr);
  }
  h = hash_double(h, momentum);
  h = hash_double(h, l2);
  h = derive_seed(h, augmentation.index());
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, GaussianReplicate>) {
          h = derive_seed(h, static_cast<std::uint64_t>(a.copies));
          h = hash_double(h, a.sigma);
        } else if constexpr (std::is_same_v<T, CropFlip>) {
          h = derive_seed(h, static_cast<std::uint64_t>(a.pad));
        }
      },
      augmentation);
  h = derive_seed(h, static_cast<std::uint64_t>(max_epochs));
  h = derive_seed(h, stop_at_full_train_acc ? 1 : 0);
  h = derive_seed(h, static_cast<std::uint64_t>(plateau.window));
  h = hash_double(h, plateau.min_delta);
  return derive_seed(h, seed);
}

std::string_view augmentation_name(const Augmentation& a) {
  switch (a.index()) {
    case 0: return "none";
    case 1: return "gaussian-replicate";
    default: return "crop-flip";
  }
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::FullTrainAcc: return "full-train-acc";
    case StopReason::Plateau: return "plateau";
    case StopReason::MaxEpochs: return "max-epochs";
  }
  return "unknown";
}

Dataset prepare_training_set(const Dataset& ds, const TrainConfig& cfg) {
  if (const auto* g = std::get_if<GaussianReplicate>(&cfg.augmentation)) {
    return augment_gaussian_replicate(ds, g->copies, g->sigma,
                                      derive_seed(cfg.seed, kReplicateStream));
  }
  if (std::holds_alternative<CropFlip>(cfg.augmentation) && !ds.image) {
    throw ContractViolation("crop-flip augmentation requires an image dataset");
  }
  return ds;
}

EpochStats sgd_epoch(const MlpSpec& spec, Weights& w, Velocity& v, const Dataset& data,
                     const TrainConfig& cfg, int epoch) {
  if (data.size() == 0) throw ContractViolation("sgd_epoch: empty dataset");
  check_shapes(spec, w.layers);
  check_shapes(spec, v);

  Rng rng = make_rng(derive_seed(derive_seed(cfg.seed, kEpochStream), static_cast<std::uint64_t>(epoch)));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span(order), rng);

  const double lr = lr_at(cfg.schedule, epoch);
  const auto* crop = std::get_if<CropFlip>(&cfg.augmentation);
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(start + bs, order.size());
    Batch batch = data.rows(std::span(order).subspan(start, end - start));
    if (crop) batch = augment_crop_flip(batch, *data.image, crop->pad, rng);

    auto [batch_loss, g] = loss_and_grads(spec, w, batch, cfg.l2);
    if (!std::isfinite(batch_loss)) {
      throw DivergedError(fmt::format("non-finite loss at epoch {}", epoch), {});
    }
    if (cfg.momentum != 0.0) {
      for (std::size_t l = 0; l < v.size(); ++l) {
        v[l].weight = cfg.momentum * v[l].weight + g[l].weight;
        v[l].bias = cfg.momentum * v[l].bias + g[l].bias;
      }
    } else {
      v = std::move(g);
    }
    axpy_stack(w.layers, -lr, v);
    if (!w.all_finite()) {
      throw DivergedError(fmt::format("non-finite parameters at epoch {}", epoch), {});
    }
    loss_sum += batch_loss * static_cast<double>(end - start);
  }

  EpochStats stats;
  stats.epoch = epoch;
  stats.lr = lr;
  stats.train_loss = loss_sum / static_cast<double>(order.size());
  return stats;
}

RunRecord train(const Dataset& train_set, const std::optional<Dataset>& test_set,
                const MlpSpec& spec, const Weights& init, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  train_set.validate();
  check_shapes(spec, init.layers);
  if (train_set.dim() != spec.input_dim || train_set.n_classes != spec.n_classes) {
    throw ContractViolation("training set dimensions do not match the network spec");
  }
  const Dataset data = prepare_training_set(train_set, cfg);
  if (static_cast<std::size_t>(cfg.batch_size) > data.size()) {
    throw ContractViolation(fmt::format("batch_size {} exceeds training-set size {}",
                                        cfg.batch_size, data.size()));
  }

  RunRecord record;
  record.config_fingerprint = cfg.fingerprint();
  Weights w = init;
  Velocity v = zeros_like(spec);
  double best_acc = 0.0;
  std::vector<double> best_history;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochStats stats;
    Weights last_finite = w;
    try {
      stats = sgd_epoch(spec, w, v, data, cfg, epoch);
    } catch (const DivergedError& e) {
      record.final_weights = std::move(last_finite);
      throw DivergedError(e.what(), std::move(record));
    }
    stats.train_acc = accuracy(spec, w, data.features, data.labels);
    if (test_set && epoch % cfg.eval_every == 0) {
      stats.test_acc = accuracy(spec, w, test_set->features, test_set->labels);
    }
    record.epochs.push_back(stats);
    best_acc = std::max(best_acc, stats.train_acc);
    best_history.push_back(best_acc);

    if (cfg.stop_at_full_train_acc && stats.train_acc >= 1.0) {
      record.stopped_reason = StopReason::FullTrainAcc;
      break;
    }
    const auto window = static_cast<std::size_t>(cfg.plateau.window);
    if (best_history.size() > window &&
        best_acc - best_history[best_history.size() - 1 - window] < cfg.plateau.min_delta) {
      record.stopped_reason = StopReason::Plateau;
      break;
    }
    record.stopped_reason = StopReason::MaxEpochs;
  }
  if (test_set && !record.epochs.empty() && !record.epochs.back().test_acc) {
    record.epochs.back().test_acc = accuracy(spec, w, test_set->features, test_set->labels);
  }

  w.provenance = Provenance::Trained;
  w.seed = cfg.seed;
  record.final_weights = std::move(w);
  return record;
}

}  // namespace sgdlab
