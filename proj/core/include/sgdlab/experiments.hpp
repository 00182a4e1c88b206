#pragma once

// Experiment protocols over an ExperimentConfig: the four toy settings, the
// 8x2 heuristic grid, the replication sweep, the six-model distance table,
// robustness and complexity reports.

#include "sgdlab/advinit.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/results.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace sgdlab {

struct ExperimentData {
  Dataset train;
  Dataset test;
  double class_std = 0.0;  // mean per-class feature std of train
};

ExperimentData load_data(const ExperimentConfig& cfg);

// Every random choice of one run derives from its run seed.
struct RunSeeds {
  std::uint64_t init = 0;      // random init, also the start of adversarial pretraining
  std::uint64_t labels = 0;    // random labels / adversarial corpus
  std::uint64_t pretrain = 0;  // shuffling during random-label training
  std::uint64_t train = 0;     // shuffling and augmentation during true-label training
};
RunSeeds run_seeds(std::uint64_t seed);

// Which of augmentation, l2 and momentum a true-label run enables.
struct Recipe {
  bool da = false;
  bool l2 = false;
  bool momentum = false;

  // "Vanilla", "DA", "l2", "Momentum", "DA+l2", ...
  std::string name() const;
  bool operator==(const Recipe&) const = default;
  auto operator<=>(const Recipe&) const = default;
};

inline constexpr Recipe kVanilla{};
inline constexpr Recipe kRegularized{true, true, false};  // setting 4 / sweep
inline constexpr Recipe kSota{true, true, true};

// Accepts "Vanilla" or '+'-joined DA, Momentum and l2 (also written
// "$\ell_2$", "\ell_2", "ℓ2" or "L2").
Recipe parse_recipe(std::string_view text);
// The eight combinations in table order.
const std::vector<Recipe>& grid_recipes();

enum class InitKind { Random, Adversarial };

struct InitRef {
  InitKind kind = InitKind::Random;
  int replication = 1;
  double zero_out_pct = 0.0;
  auto operator<=>(const InitRef&) const = default;
};

TrainConfig pretrain_config(const ExperimentConfig& cfg, int replication, std::uint64_t seed);
TrainConfig recipe_config(const ExperimentConfig& cfg, const ExperimentData& data,
                          const Recipe& recipe, std::uint64_t seed);

// Holds the data and memoizes inits and training runs, so experiments that
// share a model (setting 1 and the vanilla/random grid cell, say) train it once.
// Every memoized value depends only on its key, never on call order.
class Session {
public:
  explicit Session(ExperimentConfig cfg, std::optional<std::filesystem::path> out_dir = {});

  const ExperimentConfig& config() const { return cfg_; }
  const ExperimentData& data();
  const std::optional<std::filesystem::path>& out_dir() const { return out_; }

  Weights random_init(std::uint64_t seed) const;
  const AdvInitResult& adversarial_init(std::uint64_t seed, int replication, double zero_out_pct);
  const Weights& init(std::uint64_t seed, const InitRef& ref);
  // Vanilla training on randomly relabelled training data from the random init.
  const RunRecord& random_label_run(std::uint64_t seed);
  const RunRecord& trained(std::uint64_t seed, const Recipe& recipe, const InitRef& ref);

  // Progress messages; silent by default.
  std::function<void(const std::string&)> log;

  void save(const std::filesystem::path& relative, const Weights& w, std::uint64_t fingerprint) const;

private:
  void say(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::optional<std::filesystem::path> out_;
  std::unique_ptr<ExperimentData> data_;
  std::map<std::uint64_t, Weights> random_;
  std::map<std::tuple<std::uint64_t, int, int>, AdvInitResult> adv_;
  std::map<std::uint64_t, RunRecord> random_label_;
  std::map<std::tuple<std::uint64_t, Recipe, bool, int, int>, RunRecord> trained_;
};

// Per-epoch rows (every trace_stride epochs and the last) and end-of-run rows:
// train_acc, test_acc, epochs, stop_reason (0 full-train-acc, 1 plateau,
// 2 max-epochs), frobenius, path_l1, path_l2, dist_from_init and, for 2-D
// data, margin_min and margin_median.
void record_run(ResultsTable& table, Session& s, const std::string& cell, std::uint64_t seed,
                const RunRecord& run, const Weights& init, const Dataset& margin_set);

// k in 1..4. A seed whose training fails gets a "failed" row; the rest continue.
ResultsTable run_setting(int k, Session& s);
ResultsTable heuristic_grid(Session& s);
ResultsTable sweep_r(Session& s);

// Model roles per seed: W0R, WVR, WSR, W0A, WVA, WSA (init / vanilla / sota
// from random (R) and adversarial (A) initialization).
const std::vector<std::string>& model_roles();
using RoleMap = std::map<std::string, Weights>;
using ModelSet = std::map<std::uint64_t, RoleMap>;

// Trains (or reuses) the six models for every seed; saves them under
// checkpoints/models/seed-<s>/<role>.ckpt when checkpoints are on.
// Seeds whose training failed are left out and listed in `failed`.
ModelSet six_models(Session& s, std::vector<std::uint64_t>* failed = nullptr);
ModelSet load_models(const std::filesystem::path& models_dir, const std::vector<std::uint64_t>& seeds);

// Column names of the distance table, e.g. "d(W0R,WVR)".
const std::vector<std::string>& distance_columns();
// Throws ContractViolation naming the first missing role.
ResultsTable distance_table(const ModelSet& models, bool sanity_column = false);

ResultsTable robustness_experiment(Session& s);
ResultsTable complexity_experiment(Session& s);

// Dispatch on cfg.experiment.
ResultsTable run_experiment(Session& s);

}  // namespace sgdlab
