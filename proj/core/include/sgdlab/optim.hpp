#pragma once

// Minibatch SGD with optional heavy-ball momentum, l2 weight decay and data
// augmentation, driven by a piecewise-constant learning-rate schedule.

#include "sgdlab/data.hpp"
#include "sgdlab/errors.hpp"
#include "sgdlab/nn.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace sgdlab {

struct LrSegment {
  int start_epoch = 1;
  double lr = 0.1;
  bool operator==(const LrSegment&) const = default;
};

struct LrSchedule {
  std::vector<LrSegment> segments{{1, 0.1}};

  void validate() const;
  static LrSchedule constant(double lr) { return {{{1, lr}}}; }
  // 0.1 for epochs 1-150, 0.01 for 151-250, 0.001 from 251.
  static LrSchedule cifar();
  bool operator==(const LrSchedule&) const = default;
};

double lr_at(const LrSchedule& schedule, int epoch);

struct NoAugmentation {
  bool operator==(const NoAugmentation&) const = default;
};
struct GaussianReplicate {
  int copies = 2;
  double sigma = 0.15;
  bool operator==(const GaussianReplicate&) const = default;
};
struct CropFlip {
  int pad = 4;
  bool operator==(const CropFlip&) const = default;
};
using Augmentation = std::variant<NoAugmentation, GaussianReplicate, CropFlip>;

struct Plateau {
  int window = 20;
  double min_delta = 0.001;  // accuracy fraction, i.e. 0.1 percentage points
  bool operator==(const Plateau&) const = default;
};

struct TrainConfig {
  int batch_size = 10;
  LrSchedule schedule = LrSchedule::constant(0.1);
  double momentum = 0.0;
  double l2 = 0.0;
  Augmentation augmentation = NoAugmentation{};
  int max_epochs = 2000;
  bool stop_at_full_train_acc = true;
  Plateau plateau;
  std::uint64_t seed = 0;
  // Test accuracy is measured every eval_every epochs and at the final epoch.
  // Does not affect the trajectory, so it is left out of the fingerprint.
  int eval_every = 1;

  void validate() const;
  bool is_vanilla() const;
  std::uint64_t fingerprint() const;
  bool operator==(const TrainConfig&) const = default;
};

std::string_view augmentation_name(const Augmentation& a);

enum class StopReason { FullTrainAcc, Plateau, MaxEpochs };
std::string_view to_string(StopReason r);

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // example-weighted mean of minibatch losses
  double train_acc = 0.0;   // on the training set as trained, after the epoch
  std::optional<double> test_acc;
};

struct RunRecord {
  std::vector<EpochStats> epochs;
  Weights final_weights;
  StopReason stopped_reason = StopReason::MaxEpochs;
  std::uint64_t config_fingerprint = 0;

  double final_train_acc() const { return epochs.empty() ? 0.0 : epochs.back().train_acc; }
};

// Momentum buffer, zero at the start of training.
using Velocity = LayerStack;

// Raised when a loss or parameter update becomes non-finite. Carries the
// epochs completed before the failure.
class DivergedError : public Error {
public:
  DivergedError(const std::string& what, RunRecord prefix)
      : Error(what), prefix_(std::move(prefix)) {}
  const RunRecord& prefix() const noexcept { return prefix_; }

private:
  RunRecord prefix_;
};

// Applies gaussian-replicate once (other modes leave the set unchanged).
Dataset prepare_training_set(const Dataset& ds, const TrainConfig& cfg);

// One pass over `data` (already prepared). Shuffles with an RNG seeded from
// (cfg.seed, epoch); per batch: v <- momentum*v + g, w <- w - lr*v.
// Returns stats with train_acc left at 0; train() fills it in.
EpochStats sgd_epoch(const MlpSpec& spec, Weights& w, Velocity& v, const Dataset& data,
                     const TrainConfig& cfg, int epoch);

RunRecord train(const Dataset& train_set, const std::optional<Dataset>& test_set,
                const MlpSpec& spec, const Weights& init, const TrainConfig& cfg);

}  // namespace sgdlab
