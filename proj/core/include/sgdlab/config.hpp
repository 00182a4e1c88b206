#pragma once

// Experiment configuration: one JSON document per experiment. Absent keys take
// the defaults of the chosen dataset kind; unknown keys are rejected.

#include "sgdlab/data.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/nn.hpp"
#include "sgdlab/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sgdlab {

enum class ExperimentKind { Setting, Grid, SweepR, Distances, Robustness, Complexity };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

struct ToyDataset {
  GaussianSpec train;
  int test_per_class = 500;
  std::uint64_t test_seed = 1000;
};

struct CifarSubset {
  std::filesystem::path path = "cifar-10-batches-bin";
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  bool balanced = true;
  std::uint64_t seed = 0;
};

using DatasetConfig = std::variant<ToyDataset, CifarSubset>;

// Augmentation used when a recipe enables "DA". For gaussian-replicate the
// noise level is sigma_scale times the mean per-class feature std of the
// training set, unless an absolute sigma is given.
struct AugmentationConfig {
  enum class Kind { GaussianReplicate, CropFlip } kind = Kind::GaussianReplicate;
  int copies = 2;
  double sigma_scale = 0.3;
  std::optional<double> sigma;
  int pad = 4;
};

struct Heuristics {
  double momentum = 0.9;
  double l2 = 2e-2;
  AugmentationConfig augmentation;
};

struct MarginConfig {
  Box2 box;
  int grid_res = 200;
};

struct SweepConfig {
  std::vector<int> r_values{1, 3, 5, 7, 10};
  double zero_out_pct = 10.0;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Setting;
  int setting = 1;
  DatasetConfig dataset = ToyDataset{};
  MlpSpec spec{2, {100, 100}, 2};
  // Random-label phases (Setting 2 and adversarial-init pretraining). Seeds
  // inside are ignored; every run derives its own from the run seed.
  TrainConfig pretrain;
  // True-label phases; heuristics are layered on top per recipe.
  TrainConfig train;
  Heuristics heuristics;
  AdvCorpusConfig adv{1, 0.0, 0};
  // Divide pretraining max_epochs and plateau window by R (rounded up), so a
  // larger corpus gets the same number of SGD steps per source example.
  bool scale_pretrain_by_r = true;
  SweepConfig sweep;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> epsilons{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  MarginConfig margin;
  int trace_stride = 10;  // per-epoch rows every trace_stride epochs, plus the last
  bool save_checkpoints = true;
  std::filesystem::path output_dir;

  bool is_toy() const { return std::holds_alternative<ToyDataset>(dataset); }
  // Throws ContractViolation on inconsistent values.
  void validate() const;
};

// Two Gaussians, 2-100-100-2 network.
ExperimentConfig default_toy_config();
// CIFAR-10 subset, 3072-256-10 network.
ExperimentConfig default_cifar_config();

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& file);
// Every field is written out, so the result reloads to an equal config.
std::string config_to_json(const ExperimentConfig& cfg);

// Explicit value, else cfg.output_dir, else $SGDLAB_OUTPUT_DIR, else "sgdlab-out".
std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& explicit_dir,
                                         const ExperimentConfig& cfg);

}  // namespace sgdlab
