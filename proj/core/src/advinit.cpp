#include "sgdlab/advinit.hpp"

#include "sgdlab/errors.hpp"

namespace sgdlab {

AdvInitResult make_adversarial_init(const Dataset& ds, const MlpSpec& spec,
                                    const AdvCorpusConfig& corpus_cfg,
                                    const TrainConfig& train_cfg, std::uint64_t seed) {
  if (!train_cfg.is_vanilla()) {
    throw ContractViolation(
        "adversarial initialization must use vanilla SGD (no momentum, l2 or augmentation)");
  }
  const Dataset corpus = build_adversarial_corpus(ds, corpus_cfg);

  TrainConfig cfg = train_cfg;
  cfg.stop_at_full_train_acc = true;

  AdvInitResult out;
  out.corpus_cfg = corpus_cfg;
  out.train_cfg = cfg;
  out.pretrain_record = train(corpus, std::nullopt, spec, init_weights(spec, seed), cfg);
  out.corpus_train_acc = out.pretrain_record.final_train_acc();
  out.weights = out.pretrain_record.final_weights;
  out.weights.provenance = Provenance::AdversarialInit;
  out.weights.seed = seed;
  return out;
}

}  // namespace sgdlab
