#include "doctest.h"

#include "sgdlab/config.hpp"
#include "sgdlab/errors.hpp"

#include <cstdlib>
#include <string>

using namespace sgdlab;

namespace {

std::string error_of(std::string_view json) {
  try {
    parse_config(json);
  } catch (const ContractViolation& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults round-trip through JSON") {
  for (const auto& cfg : {default_toy_config(), default_cifar_config()}) {
    const std::string text = config_to_json(cfg);
    const ExperimentConfig back = parse_config(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.train == cfg.train);
    CHECK(back.pretrain == cfg.pretrain);
    CHECK(back.spec == cfg.spec);
    CHECK(back.seeds == cfg.seeds);
  }
}

TEST_CASE("empty document gives toy defaults") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.is_toy());
  CHECK(config_to_json(cfg) == config_to_json(default_toy_config()));
  CHECK(cfg.spec == MlpSpec{2, {100, 100}, 2});
}

TEST_CASE("partial overrides") {
  const auto cfg = parse_config(R"({
    "experiment": "grid",
    "seeds": [3, 4],
    "train": {"lr": 0.5, "plateau": {"window": 7}},
    "heuristics": {"augmentation": {"sigma": 0.2}},
    "margin": {"box": [-1, 1, -2, 2], "grid_res": 64}
  })");
  CHECK(cfg.experiment == ExperimentKind::Grid);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(lr_at(cfg.train.schedule, 1) == 0.5);
  CHECK(cfg.train.plateau.window == 7);
  CHECK(cfg.train.plateau.min_delta == default_toy_config().train.plateau.min_delta);
  CHECK(cfg.heuristics.augmentation.sigma == 0.2);
  CHECK(cfg.margin.box.x.lo == -1);
  CHECK(cfg.margin.box.y.hi == 2);

  const auto sched = parse_config(R"({"train": {"schedule": [{"start_epoch": 1, "lr": 0.1}, {"start_epoch": 5, "lr": 0.01}]}})");
  CHECK(lr_at(sched.train.schedule, 5) == 0.01);
}

TEST_CASE("unknown keys name their path") {
  CHECK(error_of(R"({"train": {"lrr": 0.1}})").find("train.lrr") != std::string::npos);
  CHECK(error_of(R"({"sead": 1})").find("sead") != std::string::npos);
  CHECK(error_of(R"({"heuristics": {"augmentation": {"sigma_scal": 1}}})")
            .find("heuristics.augmentation.sigma_scal") != std::string::npos);
}

TEST_CASE("invalid values are rejected") {
  CHECK_FALSE(error_of(R"({"seeds": [1, 1]})").empty());
  CHECK_FALSE(error_of(R"({"seeds": []})").empty());
  CHECK_FALSE(error_of(R"({"setting": 5})").empty());
  CHECK_FALSE(error_of(R"({"train": {"lr": 0.1, "schedule": [{"start_epoch": 1, "lr": 0.1}]}})").empty());
  CHECK_FALSE(error_of(R"({"margin": {"grid_res": 32}})").empty());
  CHECK_FALSE(error_of(R"({"epsilons": [0.1, 0.2]})").empty());
  CHECK_FALSE(error_of(R"({"sweep": {"r_values": [3, 1]}})").empty());
  CHECK_FALSE(error_of(R"({"experiment": "nope"})").empty());
  CHECK_FALSE(error_of(R"({"train": {"lr": "fast"}})").empty());
  CHECK_FALSE(error_of(R"({"dataset": {"kind": "mnist"}})").empty());
  CHECK_FALSE(error_of(R"({"spec": {"input_dim": 3}})").empty());
  CHECK_FALSE(error_of("not json").empty());
}

TEST_CASE("experiment names") {
  for (auto k : {ExperimentKind::Setting, ExperimentKind::Grid, ExperimentKind::SweepR,
                 ExperimentKind::Distances, ExperimentKind::Robustness, ExperimentKind::Complexity}) {
    CHECK(experiment_kind_from_string(to_string(k)) == k);
  }
  CHECK(to_string(ExperimentKind::SweepR) == "sweep-r");
}

TEST_CASE("cifar defaults") {
  const auto cfg = default_cifar_config();
  CHECK_FALSE(cfg.is_toy());
  CHECK(cfg.spec == MlpSpec{3072, {256}, 10});
  CHECK(cfg.heuristics.augmentation.kind == AugmentationConfig::Kind::CropFlip);
  CHECK(cfg.adv.replication == 5);
  CHECK(cfg.adv.zero_out_pct == 10.0);
  CHECK_NOTHROW(cfg.validate());
  const auto parsed = parse_config(R"({"dataset": {"kind": "cifar10-subset", "n_train": 500}})");
  CHECK_FALSE(parsed.is_toy());
  CHECK(std::get<CifarSubset>(parsed.dataset).n_train == 500);
  CHECK(parsed.spec == cfg.spec);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig cfg = default_toy_config();
  ::unsetenv("SGDLAB_OUTPUT_DIR");
  CHECK(resolve_output_dir({}, cfg) == "sgdlab-out");
  ::setenv("SGDLAB_OUTPUT_DIR", "/tmp/from-env", 1);
  CHECK(resolve_output_dir({}, cfg) == "/tmp/from-env");
  cfg.output_dir = "from-config";
  CHECK(resolve_output_dir({}, cfg) == "from-config");
  CHECK(resolve_output_dir(std::filesystem::path("explicit"), cfg) == "explicit");
  ::unsetenv("SGDLAB_OUTPUT_DIR");
}
