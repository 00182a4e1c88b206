#include "sgdlab/config.hpp"

#include "sgdlab/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace sgdlab {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and complains about anything left over.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ContractViolation(fmt::format("config: {} must be an object", where()));
  }
  ~Reader() = default;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ContractViolation(fmt::format("config: bad value for {}: {}", name(key), e.what()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ContractViolation(fmt::format("config: unknown key '{}'", name(it.key().c_str())));
      }
    }
  }

private:
  std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_spec(const json& j, MlpSpec& spec) {
  Reader r(j, "spec");
  r.get("input_dim", spec.input_dim);
  r.get("hidden_widths", spec.hidden_widths);
  r.get("n_classes", spec.n_classes);
  r.finish();
}

json write_spec(const MlpSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_widths", spec.hidden_widths},
          {"n_classes", spec.n_classes}};
}

Augmentation read_train_augmentation(const json& j, const std::string& path) {
  Reader r(j, path);
  std::string kind = "none";
  r.get("kind", kind);
  Augmentation out;
  if (kind == "none") {
    out = NoAugmentation{};
  } else if (kind == "gaussian-replicate") {
    GaussianReplicate g;
    r.get("copies", g.copies);
    r.get("sigma", g.sigma);
    out = g;
  } else if (kind == "crop-flip") {
    CropFlip c;
    r.get("pad", c.pad);
    out = c;
  } else {
    throw ContractViolation(fmt::format("config: unknown augmentation kind '{}' in {}", kind, path));
  }
  r.finish();
  return out;
}

json write_train_augmentation(const Augmentation& a) {
  json j = {{"kind", std::string(augmentation_name(a))}};
  if (const auto* g = std::get_if<GaussianReplicate>(&a)) {
    j["copies"] = g->copies;
    j["sigma"] = g->sigma;
  } else if (const auto* c = std::get_if<CropFlip>(&a)) {
    j["pad"] = c->pad;
  }
  return j;
}

void read_train(const json& j, const std::string& path, TrainConfig& t) {
  Reader r(j, path);
  r.get("batch_size", t.batch_size);
  double lr = 0.0;
  if (const json* c = r.child("lr")) {
    if (j.contains("schedule")) {
      throw ContractViolation(fmt::format("config: {} sets both lr and schedule", path));
    }
    lr = c->get<double>();
    t.schedule = LrSchedule::constant(lr);
  }
  if (const json* s = r.child("schedule")) {
    if (!s->is_array()) throw ContractViolation(fmt::format("config: {}.schedule must be a list", path));
    t.schedule.segments.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      Reader seg((*s)[i], fmt::format("{}.schedule[{}]", path, i));
      LrSegment ls;
      seg.get("start_epoch", ls.start_epoch);
      seg.get("lr", ls.lr);
      seg.finish();
      t.schedule.segments.push_back(ls);
    }
  }
  r.get("momentum", t.momentum);
  r.get("l2", t.l2);
  if (const json* a = r.child("augmentation")) {
    t.augmentation = read_train_augmentation(*a, path + ".augmentation");
  }
  r.get("max_epochs", t.max_epochs);
  r.get("stop_at_full_train_acc", t.stop_at_full_train_acc);
  if (const json* p = r.child("plateau")) {
    Reader pr(*p, path + ".plateau");
    pr.get("window", t.plateau.window);
    pr.get("min_delta", t.plateau.min_delta);
    pr.finish();
  }
  r.finish();
}

json write_train(const TrainConfig& t) {
  json sched = json::array();
  for (const auto& s : t.schedule.segments) sched.push_back({{"start_epoch", s.start_epoch}, {"lr", s.lr}});
  return {{"batch_size", t.batch_size},
          {"schedule", sched},
          {"momentum", t.momentum},
          {"l2", t.l2},
          {"augmentation", write_train_augmentation(t.augmentation)},
          {"max_epochs", t.max_epochs},
          {"stop_at_full_train_acc", t.stop_at_full_train_acc},
          {"plateau", {{"window", t.plateau.window}, {"min_delta", t.plateau.min_delta}}}};
}

void read_heuristics(const json& j, Heuristics& h) {
  Reader r(j, "heuristics");
  r.get("momentum", h.momentum);
  r.get("l2", h.l2);
  if (const json* a = r.child("augmentation")) {
    Reader ar(*a, "heuristics.augmentation");
    std::string kind = h.augmentation.kind == AugmentationConfig::Kind::CropFlip
                           ? "crop-flip"
                           : "gaussian-replicate";
    ar.get("kind", kind);
    if (kind == "gaussian-replicate") {
      h.augmentation.kind = AugmentationConfig::Kind::GaussianReplicate;
    } else if (kind == "crop-flip") {
      h.augmentation.kind = AugmentationConfig::Kind::CropFlip;
    } else {
      throw ContractViolation(
          fmt::format("config: heuristics.augmentation.kind '{}' is not gaussian-replicate or crop-flip", kind));
    }
    ar.get("copies", h.augmentation.copies);
    ar.get("sigma_scale", h.augmentation.sigma_scale);
    if (const json* s = ar.child("sigma")) {
      if (s->is_null()) {
        h.augmentation.sigma.reset();
      } else {
        h.augmentation.sigma = s->get<double>();
      }
    }
    ar.get("pad", h.augmentation.pad);
    ar.finish();
  }
  r.finish();
}

json write_heuristics(const Heuristics& h) {
  const auto& a = h.augmentation;
  json aug = {{"kind", a.kind == AugmentationConfig::Kind::CropFlip ? "crop-flip" : "gaussian-replicate"},
              {"copies", a.copies},
              {"sigma_scale", a.sigma_scale},
              {"sigma", a.sigma ? json(*a.sigma) : json(nullptr)},
              {"pad", a.pad}};
  return {{"momentum", h.momentum}, {"l2", h.l2}, {"augmentation", aug}};
}

void read_dataset_fields(const json& j, DatasetConfig& ds) {
  Reader r(j, "dataset");
  r.child("kind");
  if (auto* toy = std::get_if<ToyDataset>(&ds)) {
    r.get("n_per_class", toy->train.n_per_class);
    r.get("mean_0", toy->train.mean_0);
    r.get("mean_1", toy->train.mean_1);
    r.get("sigma", toy->train.sigma);
    r.get("seed", toy->train.seed);
    r.get("test_per_class", toy->test_per_class);
    r.get("test_seed", toy->test_seed);
  } else {
    auto& c = std::get<CifarSubset>(ds);
    std::string path = c.path.string();
    r.get("path", path);
    c.path = path;
    r.get("n_train", c.n_train);
    r.get("n_test", c.n_test);
    r.get("balanced", c.balanced);
    r.get("seed", c.seed);
  }
  r.finish();
}

json write_dataset(const DatasetConfig& ds) {
  if (const auto* toy = std::get_if<ToyDataset>(&ds)) {
    return {{"kind", "toy-gaussians"},
            {"n_per_class", toy->train.n_per_class},
            {"mean_0", toy->train.mean_0},
            {"mean_1", toy->train.mean_1},
            {"sigma", toy->train.sigma},
            {"seed", toy->train.seed},
            {"test_per_class", toy->test_per_class},
            {"test_seed", toy->test_seed}};
  }
  const auto& c = std::get<CifarSubset>(ds);
  return {{"kind", "cifar10-subset"},
          {"path", c.path.string()},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"balanced", c.balanced},
          {"seed", c.seed}};
}

std::string dataset_kind(const json& root) {
  auto it = root.find("dataset");
  if (it == root.end()) return "toy-gaussians";
  if (!it->is_object()) throw ContractViolation("config: 'dataset' must be an object");
  auto k = it->find("kind");
  if (k == it->end()) return "toy-gaussians";
  if (!k->is_string()) throw ContractViolation("config: dataset.kind must be a string");
  return k->get<std::string>();
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Setting: return "setting";
    case ExperimentKind::Grid: return "grid";
    case ExperimentKind::SweepR: return "sweep-r";
    case ExperimentKind::Distances: return "distances";
    case ExperimentKind::Robustness: return "robustness";
    case ExperimentKind::Complexity: return "complexity";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::Setting, ExperimentKind::Grid, ExperimentKind::SweepR,
                 ExperimentKind::Distances, ExperimentKind::Robustness, ExperimentKind::Complexity}) {
    if (to_string(k) == s) return k;
  }
  throw ContractViolation(fmt::format("unknown experiment '{}'", s));
}

void ExperimentConfig::validate() const {
  if (experiment == ExperimentKind::Setting && (setting < 1 || setting > 4)) {
    throw ContractViolation(fmt::format("setting must be 1..4, got {}", setting));
  }
  spec.validate();
  pretrain.validate();
  train.validate();
  adv.validate();
  if (seeds.empty()) throw ContractViolation("seeds must not be empty");
  {
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ContractViolation("seeds must be distinct");
    }
  }
  if (sweep.r_values.empty()) throw ContractViolation("sweep.r_values must not be empty");
  for (std::size_t i = 0; i < sweep.r_values.size(); ++i) {
    if (sweep.r_values[i] < 1) throw ContractViolation("sweep.r_values must be positive");
    if (i > 0 && sweep.r_values[i] <= sweep.r_values[i - 1]) {
      throw ContractViolation("sweep.r_values must be increasing");
    }
  }
  AdvCorpusConfig{1, sweep.zero_out_pct, 0}.validate();
  if (epsilons.empty() || epsilons.front() != 0.0) throw ContractViolation("epsilons must start at 0");
  for (std::size_t i = 1; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > epsilons[i - 1])) throw ContractViolation("epsilons must be increasing");
  }
  if (!(heuristics.momentum >= 0.0 && heuristics.momentum < 1.0)) {
    throw ContractViolation("heuristics.momentum must lie in [0, 1)");
  }
  if (!(heuristics.l2 >= 0.0)) throw ContractViolation("heuristics.l2 must be >= 0");
  const auto& a = heuristics.augmentation;
  if (a.kind == AugmentationConfig::Kind::GaussianReplicate) {
    if (a.copies < 1) throw ContractViolation("heuristics.augmentation.copies must be >= 1");
    if (a.sigma ? !(*a.sigma > 0.0) : !(a.sigma_scale > 0.0)) {
      throw ContractViolation("heuristics.augmentation noise level must be > 0");
    }
  } else {
    if (a.pad < 0) throw ContractViolation("heuristics.augmentation.pad must be >= 0");
    if (is_toy()) throw ContractViolation("crop-flip augmentation needs image data");
  }
  if (margin.grid_res < 64) throw ContractViolation("margin.grid_res must be >= 64");
  if (!(margin.box.x.hi > margin.box.x.lo) || !(margin.box.y.hi > margin.box.y.lo)) {
    throw ContractViolation("margin.box must have positive extent");
  }
  if (trace_stride < 1) throw ContractViolation("trace_stride must be >= 1");
  if (const auto* toy = std::get_if<ToyDataset>(&dataset)) {
    if (toy->train.n_per_class < 1 || toy->test_per_class < 1) {
      throw ContractViolation("toy dataset needs at least one point per class");
    }
    if (spec.input_dim != 2 || spec.n_classes != 2) {
      throw ContractViolation("toy dataset needs input_dim 2 and n_classes 2");
    }
  } else {
    const auto& c = std::get<CifarSubset>(dataset);
    if (c.n_train < 1 || c.n_test < 1) throw ContractViolation("cifar subset sizes must be >= 1");
    if (spec.input_dim != static_cast<int>(kCifarPixels) || spec.n_classes != 10) {
      throw ContractViolation("cifar10-subset needs input_dim 3072 and n_classes 10");
    }
  }
}

ExperimentConfig default_toy_config() {
  ExperimentConfig c;
  c.dataset = ToyDataset{};
  c.spec = MlpSpec{2, {100, 100}, 2};

  c.pretrain.batch_size = 10;
  c.pretrain.schedule = LrSchedule::constant(0.02);
  c.pretrain.max_epochs = 50000;
  c.pretrain.stop_at_full_train_acc = true;
  c.pretrain.plateau = Plateau{15000, 0.001};

  c.train.batch_size = 10;
  c.train.schedule = LrSchedule::constant(0.02);
  c.train.max_epochs = 200;
  c.train.stop_at_full_train_acc = false;
  c.train.plateau = Plateau{200, 0.001};

  c.heuristics = Heuristics{0.9, 2e-2, AugmentationConfig{}};
  c.adv = AdvCorpusConfig{1, 0.0, 0};
  return c;
}

ExperimentConfig default_cifar_config() {
  ExperimentConfig c;
  c.dataset = CifarSubset{};
  c.spec = MlpSpec{static_cast<int>(kCifarPixels), {256}, 10};

  c.pretrain.batch_size = 128;
  c.pretrain.schedule = LrSchedule::constant(0.01);
  c.pretrain.max_epochs = 300;
  c.pretrain.stop_at_full_train_acc = true;
  c.pretrain.plateau = Plateau{20, 0.001};

  c.train.batch_size = 128;
  c.train.schedule = LrSchedule{{{1, 0.01}, {151, 0.001}, {251, 0.0001}}};
  c.train.max_epochs = 300;
  c.train.stop_at_full_train_acc = false;
  c.train.plateau = Plateau{300, 0.001};

  AugmentationConfig aug;
  aug.kind = AugmentationConfig::Kind::CropFlip;
  aug.pad = 4;
  c.heuristics = Heuristics{0.9, 5e-4, aug};
  c.adv = AdvCorpusConfig{5, 10.0, 0};
  return c;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(fmt::format("config: invalid JSON: {}", e.what()));
  }
  if (!root.is_object()) throw ContractViolation("config: document must be an object");

  const std::string kind = dataset_kind(root);
  ExperimentConfig c;
  if (kind == "toy-gaussians") {
    c = default_toy_config();
  } else if (kind == "cifar10-subset") {
    c = default_cifar_config();
  } else {
    throw ContractViolation(fmt::format("config: unknown dataset kind '{}'", kind));
  }

  try {
  Reader r(root, "");
  if (const json* e = r.child("experiment")) c.experiment = experiment_kind_from_string(e->get<std::string>());
  r.get("setting", c.setting);
  if (const json* d = r.child("dataset")) read_dataset_fields(*d, c.dataset);
  if (const json* s = r.child("spec")) read_spec(*s, c.spec);
  if (const json* t = r.child("pretrain")) read_train(*t, "pretrain", c.pretrain);
  if (const json* t = r.child("train")) read_train(*t, "train", c.train);
  if (const json* h = r.child("heuristics")) read_heuristics(*h, c.heuristics);
  if (const json* a = r.child("adv")) {
    Reader ar(*a, "adv");
    ar.get("replication", c.adv.replication);
    ar.get("zero_out_pct", c.adv.zero_out_pct);
    ar.finish();
  }
  r.get("scale_pretrain_by_r", c.scale_pretrain_by_r);
  if (const json* s = r.child("sweep")) {
    Reader sr(*s, "sweep");
    sr.get("r_values", c.sweep.r_values);
    sr.get("zero_out_pct", c.sweep.zero_out_pct);
    sr.finish();
  }
  r.get("seeds", c.seeds);
  r.get("epsilons", c.epsilons);
  if (const json* m = r.child("margin")) {
    Reader mr(*m, "margin");
    if (const json* b = mr.child("box")) {
      const auto v = b->get<std::vector<double>>();
      if (v.size() != 4) throw ContractViolation("config: margin.box is [x_lo, x_hi, y_lo, y_hi]");
      c.margin.box = Box2{{v[0], v[1]}, {v[2], v[3]}};
    }
    mr.get("grid_res", c.margin.grid_res);
    mr.finish();
  }
  r.get("trace_stride", c.trace_stride);
  r.get("save_checkpoints", c.save_checkpoints);
  std::string out;
  r.get("output_dir", out);
  if (!out.empty()) c.output_dir = out;
  r.finish();
  } catch (const json::exception& e) {
    throw ContractViolation(fmt::format("config: {}", e.what()));
  }

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  const auto& b = c.margin.box;
  json j = {{"experiment", std::string(to_string(c.experiment))},
            {"setting", c.setting},
            {"dataset", write_dataset(c.dataset)},
            {"spec", write_spec(c.spec)},
            {"pretrain", write_train(c.pretrain)},
            {"train", write_train(c.train)},
            {"heuristics", write_heuristics(c.heuristics)},
            {"adv", {{"replication", c.adv.replication}, {"zero_out_pct", c.adv.zero_out_pct}}},
            {"scale_pretrain_by_r", c.scale_pretrain_by_r},
            {"sweep", {{"r_values", c.sweep.r_values}, {"zero_out_pct", c.sweep.zero_out_pct}}},
            {"seeds", c.seeds},
            {"epsilons", c.epsilons},
            {"margin", {{"box", {b.x.lo, b.x.hi, b.y.lo, b.y.hi}}, {"grid_res", c.margin.grid_res}}},
            {"trace_stride", c.trace_stride},
            {"save_checkpoints", c.save_checkpoints},
            {"output_dir", c.output_dir.string()}};
  return j.dump(2) + "\n";
}

std::filesystem::path resolve_output_dir(const std::optional<std::filesystem::path>& explicit_dir,
                                         const ExperimentConfig& cfg) {
  if (explicit_dir && !explicit_dir->empty()) return *explicit_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("SGDLAB_OUTPUT_DIR"); env && *env) return env;
  return "sgdlab-out";
}

}  // namespace sgdlab
