#include "doctest.h"
#include "helpers.hpp"

#include "sgdlab/optim.hpp"

#include <cmath>

using namespace sgdlab;
using namespace testutil;

namespace {

Dataset two_points() { return dataset(mat(2, 2, {-1, 0, 1, 0}), {0, 1}); }

Dataset small_blobs(std::uint64_t seed = 0) {
  GaussianSpec g;
  g.n_per_class = 20;
  g.seed = seed;
  return gen_two_gaussians(g);
}

}  // namespace

TEST_CASE("lr schedule lookup") {
  const auto s = LrSchedule::cifar();
  CHECK(lr_at(s, 1) == 0.1);
  CHECK(lr_at(s, 150) == 0.1);
  CHECK(lr_at(s, 151) == 0.01);
  CHECK(lr_at(s, 200) == 0.01);
  CHECK(lr_at(s, 251) == 0.001);
  CHECK(lr_at(s, 100000) == 0.001);
  CHECK(lr_at(LrSchedule::constant(0.05), 77) == 0.05);
  CHECK_THROWS_AS(lr_at(s, 0), ContractViolation);
  CHECK_THROWS_AS(LrSchedule({{{2, 0.1}}}).validate(), ContractViolation);
  CHECK_THROWS_AS(LrSchedule({{{1, 0.1}, {1, 0.01}}}).validate(), ContractViolation);
  CHECK_THROWS_AS(LrSchedule({{{1, -0.1}}}).validate(), ContractViolation);
  CHECK_NOTHROW(LrSchedule({{{1, 0.0}}}).validate());
}

TEST_CASE("full-batch vanilla step is w - lr*g") {
  const MlpSpec spec{2, {3}, 2};
  const Dataset ds = small_blobs();
  Weights w = init_weights(spec, 5);
  const Weights before = w;
  TrainConfig cfg;
  cfg.batch_size = static_cast<int>(ds.size());
  cfg.schedule = LrSchedule::constant(0.3);
  Velocity v = zeros_like(spec);
  sgd_epoch(spec, w, v, ds, cfg, 1);

  // order is shuffled but the full-batch mean does not depend on it
  const auto g = loss_and_grads(spec, before, ds.as_batch(), 0.0).grads;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    CHECK((w.layers[l].weight - (before.layers[l].weight - 0.3 * g[l].weight)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((w.layers[l].bias - (before.layers[l].bias - 0.3 * g[l].bias)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("momentum buffer accumulates with lr 0") {
  const MlpSpec spec{2, {3}, 2};
  const Dataset ds = two_points();
  Weights w = init_weights(spec, 1);
  const Weights before = w;
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.schedule = LrSchedule::constant(0.0);
  cfg.momentum = 0.9;
  Velocity v = zeros_like(spec);
  sgd_epoch(spec, w, v, ds, cfg, 1);
  sgd_epoch(spec, w, v, ds, cfg, 2);
  CHECK(same_params(w, before));
  const auto g = loss_and_grads(spec, before, ds.as_batch(), 0.0).grads;
  for (std::size_t l = 0; l < v.size(); ++l) {
    CHECK((v[l].weight - 1.9 * g[l].weight).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((v[l].bias - 1.9 * g[l].bias).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("l2 shrinks weights when the data gradient vanishes") {
  // zero inputs: the weight-matrix gradients of layer 0 are pure decay
  const MlpSpec spec{2, {}, 2};
  Weights w = weights({{mat(2, 2, {1, 2, 3, 4}), vec({0, 0})}});
  const Dataset ds = dataset(Matrix::Zero(2, 2), {0, 1});
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.schedule = LrSchedule::constant(0.1);
  cfg.l2 = 0.5;
  Velocity v = zeros_like(spec);
  sgd_epoch(spec, w, v, ds, cfg, 1);
  CHECK((w.layers[0].weight - 0.95 * mat(2, 2, {1, 2, 3, 4})).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("separable pair reaches full train accuracy") {
  const MlpSpec spec{2, {8}, 2};
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.schedule = LrSchedule::constant(0.1);
  cfg.max_epochs = 100;
  const auto rec = train(two_points(), std::nullopt, spec, init_weights(spec, 0), cfg);
  CHECK(rec.stopped_reason == StopReason::FullTrainAcc);
  CHECK(rec.final_train_acc() == 1.0);
  CHECK(rec.epochs.size() <= 100);
  CHECK(rec.final_weights.provenance == Provenance::Trained);
}

TEST_CASE("invalid configs") {
  TrainConfig cfg;
  cfg.max_epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.augmentation = GaussianReplicate{2, 0.0};
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = {};
  cfg.eval_every = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);

  const MlpSpec spec{2, {}, 2};
  TrainConfig big;
  big.batch_size = 3;
  CHECK_THROWS_AS(train(two_points(), std::nullopt, spec, init_weights(spec, 0), big), ContractViolation);
  TrainConfig crop;
  crop.batch_size = 1;
  crop.augmentation = CropFlip{};
  CHECK_THROWS_AS(train(two_points(), std::nullopt, spec, init_weights(spec, 0), crop), ContractViolation);
}

TEST_CASE("training is deterministic and seed-sensitive") {
  const MlpSpec spec{2, {6}, 2};
  const Dataset ds = small_blobs();
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 5;
  cfg.stop_at_full_train_acc = false;
  cfg.momentum = 0.9;
  cfg.augmentation = GaussianReplicate{2, 0.2};
  cfg.seed = 3;
  const auto a = train(ds, ds, spec, init_weights(spec, 0), cfg);
  const auto b = train(ds, ds, spec, init_weights(spec, 0), cfg);
  CHECK(same_params(a.final_weights, b.final_weights));
  CHECK(a.config_fingerprint == b.config_fingerprint);
  cfg.seed = 4;
  const auto c = train(ds, ds, spec, init_weights(spec, 0), cfg);
  CHECK_FALSE(same_params(a.final_weights, c.final_weights));
  CHECK(a.config_fingerprint != c.config_fingerprint);
}

TEST_CASE("divergence reports the completed prefix") {
  const MlpSpec spec{2, {4}, 2};
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.schedule = LrSchedule::constant(1e300);
  cfg.max_epochs = 50;
  try {
    train(small_blobs(), std::nullopt, spec, init_weights(spec, 0), cfg);
    FAIL("expected divergence");
  } catch (const DivergedError& e) {
    CHECK(e.prefix().epochs.size() < 50);
    CHECK(e.prefix().final_weights.all_finite());
  }
}

TEST_CASE("plateau stop") {
  // lr 0 never changes accuracy
  const MlpSpec spec{2, {}, 2};
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.schedule = LrSchedule::constant(0.0);
  cfg.max_epochs = 100;
  cfg.plateau = {5, 0.001};
  const Weights w = weights({{mat(2, 2, {1, 0, 1, 0}), vec({0, 0})}});  // always predicts 0
  const auto rec = train(two_points(), std::nullopt, spec, w, cfg);
  CHECK(rec.stopped_reason == StopReason::Plateau);
  CHECK(rec.epochs.size() == 6);
  CHECK(rec.final_train_acc() == 0.5);
}

TEST_CASE("max-epochs stop and eval_every") {
  const MlpSpec spec{2, {4}, 2};
  const Dataset ds = small_blobs();
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.max_epochs = 7;
  cfg.stop_at_full_train_acc = false;
  cfg.plateau = {1000, 0.001};
  cfg.eval_every = 3;
  const auto rec = train(ds, ds, spec, init_weights(spec, 0), cfg);
  CHECK(rec.stopped_reason == StopReason::MaxEpochs);
  REQUIRE(rec.epochs.size() == 7);
  for (const auto& e : rec.epochs) {
    const bool expect = e.epoch % 3 == 0 || e.epoch == 7;
    CHECK(e.test_acc.has_value() == expect);
  }

  TrainConfig every = cfg;
  every.eval_every = 1;
  const auto full = train(ds, ds, spec, init_weights(spec, 0), every);
  CHECK(same_params(full.final_weights, rec.final_weights));
  CHECK(full.config_fingerprint == rec.config_fingerprint);
}

TEST_CASE("gaussian replicate enlarges the prepared set") {
  TrainConfig cfg;
  cfg.augmentation = GaussianReplicate{2, 0.1};
  const Dataset ds = small_blobs();
  CHECK(prepare_training_set(ds, cfg).size() == 3 * ds.size());
  CHECK(augmentation_name(cfg.augmentation) == "gaussian-replicate");
  CHECK_FALSE(cfg.is_vanilla());
  CHECK(TrainConfig{}.is_vanilla());
}
