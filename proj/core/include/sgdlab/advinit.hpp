#pragma once

// Adversarial initializer: pretrain on a replicated, partially zeroed copy of
// the training features carrying uniformly random labels.

#include "sgdlab/data.hpp"
#include "sgdlab/nn.hpp"
#include "sgdlab/optim.hpp"

#include <cstdint>

namespace sgdlab {

struct AdvInitResult {
  Weights weights;  // provenance = adversarial-init
  double corpus_train_acc = 0.0;
  RunRecord pretrain_record;
  AdvCorpusConfig corpus_cfg;
  TrainConfig train_cfg;
};

// Only the features of `ds` are used. `train_cfg` must be vanilla SGD; it is
// run with stop_at_full_train_acc forced on, from init_weights(spec, seed).
AdvInitResult make_adversarial_init(const Dataset& ds, const MlpSpec& spec,
                                    const AdvCorpusConfig& corpus_cfg,
                                    const TrainConfig& train_cfg, std::uint64_t seed);

}  // namespace sgdlab
