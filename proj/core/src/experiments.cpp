#include "sgdlab/experiments.hpp"

#include "sgdlab/checkpoint.hpp"
#include "sgdlab/errors.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/random.hpp"

#include <chrono>
#include <cmath>
#include <fmt/format.h>

namespace sgdlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool is_l2_token(const std::string& t) {
  return t == "l2" || t == "L2" || t == "$\\ell_2$" || t == "\\ell_2" || t == "ℓ2" || t == "ℓ_2";
}

InitRef adv_ref(const ExperimentConfig& cfg) {
  return {InitKind::Adversarial, cfg.adv.replication, cfg.adv.zero_out_pct};
}

std::string seed_dir(std::uint64_t seed) { return fmt::format("seed-{}", seed); }

// Runs `body` for one (cell, seed); failures are logged and flagged in the table.
template <class F>
void guarded(Session& s, ResultsTable& table, const std::string& cell, std::uint64_t seed, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (s.log) s.log(fmt::format("{} seed {} failed: {}", cell, seed, e.what()));
    table.add(cell, seed, "failed", 1.0);
  }
}

}  // namespace

ExperimentData load_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  if (const auto* toy = std::get_if<ToyDataset>(&cfg.dataset)) {
    d.train = gen_two_gaussians(toy->train);
    d.train.name = "toy-train";
    GaussianSpec test = toy->train;
    test.n_per_class = toy->test_per_class;
    test.seed = toy->test_seed;
    d.test = gen_two_gaussians(test);
    d.test.name = "toy-test";
  } else {
    const auto& c = std::get<CifarSubset>(cfg.dataset);
    auto tt = load_cifar10_subset(c.path, c.n_train, c.n_test, c.balanced, c.seed);
    d.train = std::move(tt.train);
    d.test = std::move(tt.test);
  }
  d.class_std = mean_class_std(d.train);
  return d;
}

RunSeeds run_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3), derive_seed(seed, 4)};
}

std::string Recipe::name() const {
  std::vector<std::string> parts;
  if (da) parts.push_back("DA");
  if (l2) parts.push_back("l2");
  if (momentum) parts.push_back("Momentum");
  if (parts.empty()) return "Vanilla";
  return fmt::format("{}", fmt::join(parts, "+"));
}

Recipe parse_recipe(std::string_view text) {
  const std::string whole = trim(text);
  if (whole == "Vanilla" || whole == "vanilla") return kVanilla;
  Recipe r;
  std::size_t start = 0;
  while (start <= whole.size()) {
    const auto plus = whole.find('+', start);
    const std::string tok = trim(std::string_view(whole).substr(
        start, plus == std::string::npos ? std::string::npos : plus - start));
    bool* flag = nullptr;
    if (tok == "DA" || tok == "da") {
      flag = &r.da;
    } else if (is_l2_token(tok)) {
      flag = &r.l2;
    } else if (tok == "Momentum" || tok == "momentum") {
      flag = &r.momentum;
    } else {
      throw ContractViolation(fmt::format("unknown heuristic '{}' in '{}'", tok, whole));
    }
    if (*flag) throw ContractViolation(fmt::format("heuristic '{}' repeated in '{}'", tok, whole));
    *flag = true;
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return r;
}

const std::vector<Recipe>& grid_recipes() {
  static const std::vector<Recipe> recipes = {
      {false, false, false}, {true, false, false}, {false, true, false}, {false, false, true},
      {true, true, false},   {true, false, true},  {false, true, true},  {true, true, true}};
  return recipes;
}

TrainConfig pretrain_config(const ExperimentConfig& cfg, int replication, std::uint64_t seed) {
  if (replication < 1) throw ContractViolation("replication must be >= 1");
  TrainConfig t = cfg.pretrain;
  t.seed = seed;
  t.eval_every = cfg.trace_stride;
  if (cfg.scale_pretrain_by_r && replication > 1) {
    t.max_epochs = ceil_div(t.max_epochs, replication);
    t.plateau.window = ceil_div(t.plateau.window, replication);
  }
  return t;
}

TrainConfig recipe_config(const ExperimentConfig& cfg, const ExperimentData& data,
                          const Recipe& recipe, std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.seed = seed;
  t.eval_every = cfg.trace_stride;
  const auto& h = cfg.heuristics;
  if (recipe.da) {
    if (h.augmentation.kind == AugmentationConfig::Kind::CropFlip) {
      t.augmentation = CropFlip{h.augmentation.pad};
    } else {
      const double sigma = h.augmentation.sigma ? *h.augmentation.sigma
                                                : h.augmentation.sigma_scale * data.class_std;
      t.augmentation = GaussianReplicate{h.augmentation.copies, sigma};
    }
  }
  if (recipe.l2) t.l2 = h.l2;
  if (recipe.momentum) t.momentum = h.momentum;
  return t;
}

// ---- Session ----

Session::Session(ExperimentConfig cfg, std::optional<std::filesystem::path> out_dir)
    : cfg_(std::move(cfg)), out_(std::move(out_dir)) {
  cfg_.validate();
}

const ExperimentData& Session::data() {
  if (!data_) data_ = std::make_unique<ExperimentData>(load_data(cfg_));
  return *data_;
}

void Session::say(const std::string& msg) const {
  if (log) log(msg);
}

Weights Session::random_init(std::uint64_t seed) const {
  return init_weights(cfg_.spec, run_seeds(seed).init);
}

const AdvInitResult& Session::adversarial_init(std::uint64_t seed, int replication,
                                               double zero_out_pct) {
  // Keyed on the zeroed-coordinate count: N values that round to the same count
  // build the same corpus.
  const auto key = std::make_tuple(seed, replication, zero_out_count(zero_out_pct, cfg_.spec.input_dim));
  if (auto it = adv_.find(key); it != adv_.end()) return it->second;
  const RunSeeds rs = run_seeds(seed);
  if (replication == 1 && std::get<2>(key) == 0 && cfg_.pretrain.stop_at_full_train_acc) {
    // R=1 with nothing zeroed is the random-label run.
    const RunRecord& rl = random_label_run(seed);
    AdvInitResult r;
    r.corpus_cfg = {replication, zero_out_pct, rs.labels};
    r.train_cfg = pretrain_config(cfg_, replication, rs.pretrain);
    r.pretrain_record = rl;
    for (auto& e : r.pretrain_record.epochs) e.test_acc.reset();
    r.corpus_train_acc = rl.final_train_acc();
    r.weights = rl.final_weights;
    r.weights.provenance = Provenance::AdversarialInit;
    r.weights.seed = rs.init;
    return adv_.emplace(key, std::move(r)).first->second;
  }
  const auto t0 = Clock::now();
  AdvInitResult r = make_adversarial_init(data().train, cfg_.spec,
                                          AdvCorpusConfig{replication, zero_out_pct, rs.labels},
                                          pretrain_config(cfg_, replication, rs.pretrain), rs.init);
  say(fmt::format("adversarial init seed {} R={} N={}: corpus acc {:.4f} after {} epochs ({:.1f}s)",
                  seed, replication, zero_out_pct, r.corpus_train_acc,
                  r.pretrain_record.epochs.size(), seconds_since(t0)));
  return adv_.emplace(key, std::move(r)).first->second;
}

const Weights& Session::init(std::uint64_t seed, const InitRef& ref) {
  if (ref.kind == InitKind::Adversarial) {
    return adversarial_init(seed, ref.replication, ref.zero_out_pct).weights;
  }
  auto it = random_.find(seed);
  if (it == random_.end()) it = random_.emplace(seed, random_init(seed)).first;
  return it->second;
}

const RunRecord& Session::random_label_run(std::uint64_t seed) {
  if (auto it = random_label_.find(seed); it != random_label_.end()) return it->second;
  const RunSeeds rs = run_seeds(seed);
  const auto& d = data();
  const auto t0 = Clock::now();
  RunRecord r = train(randomize_labels(d.train, rs.labels), d.test, cfg_.spec, init(seed, {}),
                      pretrain_config(cfg_, 1, rs.pretrain));
  say(fmt::format("random labels seed {}: train acc {:.4f} after {} epochs ({:.1f}s)", seed,
                  r.final_train_acc(), r.epochs.size(), seconds_since(t0)));
  return random_label_.emplace(seed, std::move(r)).first->second;
}

const RunRecord& Session::trained(std::uint64_t seed, const Recipe& recipe, const InitRef& ref) {
  const bool adv = ref.kind == InitKind::Adversarial;
  const auto key = std::make_tuple(seed, recipe, adv, adv ? ref.replication : 0,
                                   adv ? zero_out_count(ref.zero_out_pct, cfg_.spec.input_dim) : 0);
  if (auto it = trained_.find(key); it != trained_.end()) return it->second;
  const Weights& w0 = init(seed, ref);
  const auto& d = data();
  const auto t0 = Clock::now();
  RunRecord r = train(d.train, d.test, cfg_.spec, w0,
                      recipe_config(cfg_, d, recipe, run_seeds(seed).train));
  say(fmt::format("{} from {} init, seed {}: train {:.4f} test {:.4f} ({:.1f}s)", recipe.name(),
                  ref.kind == InitKind::Random ? "random" : "adversarial", seed,
                  r.final_train_acc(), r.epochs.back().test_acc.value_or(0.0), seconds_since(t0)));
  return trained_.emplace(key, std::move(r)).first->second;
}

void Session::save(const std::filesystem::path& relative, const Weights& w,
                   std::uint64_t fingerprint) const {
  if (!out_ || !cfg_.save_checkpoints) return;
  save_checkpoint(make_checkpoint(cfg_.spec, w, fingerprint), *out_ / "checkpoints" / relative);
}

// ---- recording ----

void record_run(ResultsTable& table, Session& s, const std::string& cell, std::uint64_t seed,
                const RunRecord& run, const Weights& init, const Dataset& margin_set) {
  const auto& cfg = s.config();
  for (std::size_t i = 0; i < run.epochs.size(); ++i) {
    const auto& e = run.epochs[i];
    if (e.epoch % cfg.trace_stride != 0 && i + 1 != run.epochs.size()) continue;
    table.add_epoch(cell, seed, e.epoch, "lr", e.lr);
    table.add_epoch(cell, seed, e.epoch, "train_loss", e.train_loss);
    table.add_epoch(cell, seed, e.epoch, "train_acc", e.train_acc);
    if (e.test_acc) table.add_epoch(cell, seed, e.epoch, "test_acc", *e.test_acc);
  }
  const auto& w = run.final_weights;
  table.add(cell, seed, "train_acc", run.final_train_acc());
  if (!run.epochs.empty() && run.epochs.back().test_acc) {
    table.add(cell, seed, "test_acc", *run.epochs.back().test_acc);
  }
  table.add(cell, seed, "epochs", static_cast<double>(run.epochs.size()));
  table.add(cell, seed, "stop_reason", static_cast<double>(static_cast<int>(run.stopped_reason)));
  const ComplexityReport cr = complexity_report(cfg.spec, w);
  table.add(cell, seed, "frobenius", cr.frobenius);
  table.add(cell, seed, "path_l1", cr.path_norm_l1);
  table.add(cell, seed, "path_l2", cr.path_norm_l2);
  table.add(cell, seed, "dist_from_init", distance(init, w));
  if (cfg.spec.input_dim == 2) {
    const MarginReport m = margin_estimate(cfg.spec, w, margin_set, cfg.margin.box, cfg.margin.grid_res);
    table.add(cell, seed, "margin_min", m.min);
    table.add(cell, seed, "margin_median", m.median);
  }
}

// ---- protocols ----

ResultsTable run_setting(int k, Session& s) {
  if (k < 1 || k > 4) throw ContractViolation(fmt::format("setting must be 1..4, got {}", k));
  const auto& cfg = s.config();
  ResultsTable table;
  table.experiment = fmt::format("setting-{}", k);
  const std::string cell = table.experiment;
  for (auto seed : cfg.seeds) {
    guarded(s, table, cell, seed, [&] {
      const Dataset& train_set = s.data().train;
      const Weights* w0 = nullptr;
      const RunRecord* run = nullptr;
      if (k == 1 || k == 2) {
        w0 = &s.init(seed, {});
        run = k == 1 ? &s.trained(seed, kVanilla, {}) : &s.random_label_run(seed);
      } else {
        const auto& adv = s.adversarial_init(seed, cfg.adv.replication, cfg.adv.zero_out_pct);
        w0 = &adv.weights;
        run = &s.trained(seed, k == 3 ? kVanilla : kRegularized, adv_ref(cfg));
        table.add(cell, seed, "adv_corpus_train_acc", adv.corpus_train_acc);
        table.add(cell, seed, "adv_epochs", static_cast<double>(adv.pretrain_record.epochs.size()));
      }
      record_run(table, s, cell, seed, *run, *w0, train_set);
      const auto dir = std::filesystem::path(cell) / seed_dir(seed);
      s.save(dir / "init.ckpt", *w0, run->config_fingerprint);
      s.save(dir / "final.ckpt", run->final_weights, run->config_fingerprint);
    });
  }
  table.sort();
  return table;
}

ResultsTable heuristic_grid(Session& s) {
  const auto& cfg = s.config();
  ResultsTable table;
  table.experiment = "grid";
  for (const auto& recipe : grid_recipes()) {
    for (const auto kind : {InitKind::Random, InitKind::Adversarial}) {
      const InitRef ref = kind == InitKind::Random ? InitRef{} : adv_ref(cfg);
      const std::string cell =
          fmt::format("{}/{}", recipe.name(), kind == InitKind::Random ? "random" : "adversarial");
      for (auto seed : cfg.seeds) {
        guarded(s, table, cell, seed, [&] {
          const auto& run = s.trained(seed, recipe, ref);
          record_run(table, s, cell, seed, run, s.init(seed, ref), s.data().train);
          s.save(std::filesystem::path("grid") / cell / seed_dir(seed) / "final.ckpt",
                 run.final_weights, run.config_fingerprint);
        });
      }
    }
  }
  table.sort();
  return table;
}

ResultsTable sweep_r(Session& s) {
  const auto& cfg = s.config();
  ResultsTable table;
  table.experiment = "sweep-r";
  const double n_pct = cfg.sweep.zero_out_pct;
  for (int r : cfg.sweep.r_values) {
    const InitRef ref{InitKind::Adversarial, r, n_pct};
    const std::string prefix = fmt::format("R={:02}", r);
    for (auto seed : cfg.seeds) {
      guarded(s, table, prefix + "/init", seed, [&] {
        const auto& adv = s.adversarial_init(seed, r, n_pct);
        table.add(prefix + "/init", seed, "R", r);
        table.add(prefix + "/init", seed, "N", n_pct);
        table.add(prefix + "/init", seed, "adv_corpus_train_acc", adv.corpus_train_acc);
        table.add(prefix + "/init", seed, "adv_epochs",
                  static_cast<double>(adv.pretrain_record.epochs.size()));
      });
      for (const auto& [name, recipe] : {std::pair{"vanilla", kVanilla}, std::pair{"regularized", kRegularized}}) {
        const std::string cell = fmt::format("{}/{}", prefix, name);
        guarded(s, table, cell, seed, [&] {
          const auto& run = s.trained(seed, recipe, ref);
          record_run(table, s, cell, seed, run, s.init(seed, ref), s.data().train);
        });
      }
    }
  }
  table.sort();
  return table;
}

const std::vector<std::string>& model_roles() {
  static const std::vector<std::string> roles = {"W0R", "WVR", "WSR", "W0A", "WVA", "WSA"};
  return roles;
}

ModelSet six_models(Session& s, std::vector<std::uint64_t>* failed) {
  const auto& cfg = s.config();
  const InitRef adv = adv_ref(cfg);
  ModelSet out;
  for (auto seed : cfg.seeds) {
    try {
      RoleMap m;
      m["W0R"] = s.init(seed, {});
      m["WVR"] = s.trained(seed, kVanilla, {}).final_weights;
      m["WSR"] = s.trained(seed, kSota, {}).final_weights;
      m["W0A"] = s.init(seed, adv);
      m["WVA"] = s.trained(seed, kVanilla, adv).final_weights;
      m["WSA"] = s.trained(seed, kSota, adv).final_weights;
      for (const auto& [role, w] : m) {
        s.save(std::filesystem::path("models") / seed_dir(seed) / (role + ".ckpt"), w, 0);
      }
      out.emplace(seed, std::move(m));
    } catch (const Error& e) {
      if (s.log) s.log(fmt::format("seed {} failed: {}", seed, e.what()));
      if (failed) failed->push_back(seed);
    }
  }
  return out;
}

ModelSet load_models(const std::filesystem::path& models_dir, const std::vector<std::uint64_t>& seeds) {
  ModelSet out;
  for (auto seed : seeds) {
    RoleMap m;
    for (const auto& role : model_roles()) {
      const auto file = models_dir / seed_dir(seed) / (role + ".ckpt");
      if (std::filesystem::exists(file)) m[role] = load_checkpoint(file).weights();
    }
    out.emplace(seed, std::move(m));
  }
  return out;
}

const std::vector<std::string>& distance_columns() {
  static const std::vector<std::string> cols = {"d(W0R,WVR)", "d(W0R,WSR)", "d(W0R,W0A)",
                                                "d(W0R,WVA)", "d(W0R,WSA)", "d(W0A,WVA)",
                                                "d(W0A,WSA)"};
  return cols;
}

ResultsTable distance_table(const ModelSet& models, bool sanity_column) {
  ResultsTable table;
  table.experiment = "distances";
  for (const auto& [seed, roles] : models) {
    auto get = [&, seed = seed](const std::string& role) -> const Weights& {
      auto it = roles.find(role);
      if (it == roles.end()) {
        throw ContractViolation(fmt::format("distance table: seed {} has no '{}' checkpoint", seed, role));
      }
      return it->second;
    };
    for (const auto& role : model_roles()) get(role);
    for (const auto& col : distance_columns()) {
      // "d(A,B)" -> A, B
      const auto comma = col.find(',');
      const std::string a = col.substr(2, comma - 2);
      const std::string b = col.substr(comma + 1, col.size() - comma - 2);
      table.add("distances", seed, col, distance(get(a), get(b)));
    }
    if (sanity_column) table.add("distances", seed, "d(W0R,W0R)", distance(get("W0R"), get("W0R")));
  }
  table.sort();
  return table;
}

ResultsTable robustness_experiment(Session& s) {
  const auto& cfg = s.config();
  std::vector<std::uint64_t> failed;
  const ModelSet models = six_models(s, &failed);
  ResultsTable table;
  table.experiment = "robustness";
  const Dataset& test = s.data().test;
  for (const auto& [seed, roles] : models) {
    for (const char* role : {"WVR", "WSR", "WVA", "WSA"}) {
      const RobustnessCurve curve = robustness_curve(cfg.spec, roles.at(role), test, cfg.epsilons);
      for (const auto& p : curve.points) table.add(role, seed, fmt::format("acc@{}", p.epsilon), p.accuracy);
      table.add(role, seed, "auc", curve.area());
    }
  }
  for (auto seed : failed) {
    for (const char* role : {"WVR", "WSR", "WVA", "WSA"}) table.add(role, seed, "failed", 1.0);
  }
  table.sort();
  return table;
}

ResultsTable complexity_experiment(Session& s) {
  const auto& cfg = s.config();
  std::vector<std::uint64_t> failed;
  const ModelSet models = six_models(s, &failed);
  ResultsTable table;
  table.experiment = "complexity";
  const auto& d = s.data();
  for (const auto& [seed, roles] : models) {
    for (const auto& role : model_roles()) {
      const Weights& w = roles.at(role);
      const ComplexityReport cr = complexity_report(cfg.spec, w);
      table.add(role, seed, "frobenius", cr.frobenius);
      table.add(role, seed, "path_l1", cr.path_norm_l1);
      table.add(role, seed, "path_l2", cr.path_norm_l2);
      table.add(role, seed, "train_acc", accuracy(cfg.spec, w, d.train.features, d.train.labels));
      table.add(role, seed, "test_acc", accuracy(cfg.spec, w, d.test.features, d.test.labels));
      if (cfg.spec.input_dim == 2) {
        const MarginReport m = margin_estimate(cfg.spec, w, d.train, cfg.margin.box, cfg.margin.grid_res);
        table.add(role, seed, "margin_min", m.min);
        table.add(role, seed, "margin_median", m.median);
      }
    }
  }
  for (auto seed : failed) {
    for (const auto& role : model_roles()) table.add(role, seed, "failed", 1.0);
  }
  table.sort();
  return table;
}

ResultsTable run_experiment(Session& s) {
  const auto& cfg = s.config();
  switch (cfg.experiment) {
    case ExperimentKind::Setting: return run_setting(cfg.setting, s);
    case ExperimentKind::Grid: return heuristic_grid(s);
    case ExperimentKind::SweepR: return sweep_r(s);
    case ExperimentKind::Distances: {
      std::vector<std::uint64_t> failed;
      ResultsTable t = distance_table(six_models(s, &failed));
      for (auto seed : failed) t.add("distances", seed, "failed", 1.0);
      t.sort();
      return t;
    }
    case ExperimentKind::Robustness: return robustness_experiment(s);
    case ExperimentKind::Complexity: return complexity_experiment(s);
  }
  throw ContractViolation("unknown experiment");
}

}  // namespace sgdlab
