// sgdlab command-line driver. Every subcommand reads an optional JSON config
// and writes its CSV/JSON results (plus checkpoints) under the output dir.

#include "sgdlab/checkpoint.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/errors.hpp"
#include "sgdlab/experiments.hpp"
#include "sgdlab/render.hpp"
#include "sgdlab/results.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>

namespace fs = std::filesystem;
using namespace sgdlab;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  bool cifar = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "run a single seed instead of the configured list");
  sub->add_option("--out", c.out, "output directory (default: config, $SGDLAB_OUTPUT_DIR, sgdlab-out)");
  sub->add_flag("-q,--quiet", c.quiet, "no progress output");
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? default_toy_config() : load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) {
  return resolve_output_dir(c.out.empty() ? std::nullopt : std::optional<fs::path>(c.out), cfg);
}

void attach_log(Session& s, bool quiet) {
  if (quiet) return;
  s.log = [](const std::string& msg) { fmt::print(stderr, "{}\n", msg); };
}

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot write '{}'", file.string()));
  f << text;
}

void finish(const ResultsTable& table, const ExperimentConfig& cfg, const fs::path& dir) {
  const auto files = emit_results(table, dir);
  write_text(dir / (table.experiment + "_config.json"), config_to_json(cfg));
  fmt::print("{}\n{}\n", files.csv.string(), files.json.string());
}

int run_table(const Common& c, ExperimentConfig cfg, ExperimentKind kind) {
  cfg.experiment = kind;
  const fs::path dir = out_dir(c, cfg);
  Session s(cfg, dir);
  attach_log(s, c.quiet);
  finish(run_experiment(s), cfg, dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgdlab: SGD initialization and regularization experiments on small MLPs"};
  app.require_subcommand(1);

  Common setting_c, grid_c, sweep_c, dist_c, robust_c, complex_c, render_c, adv_c;

  auto* setting = app.add_subcommand("setting", "run one of the four toy settings");
  add_common(setting, setting_c);
  std::optional<int> k;
  setting->add_option("-k,--setting", k, "setting number 1-4 (default: config)");

  auto* grid = app.add_subcommand("grid", "8 heuristic combinations x {random, adversarial} init");
  add_common(grid, grid_c);

  auto* sweep = app.add_subcommand("sweep-r", "vary the replication factor R of the adversarial init");
  add_common(sweep, sweep_c);
  std::vector<int> r_values;
  std::optional<double> sweep_n;
  sweep->add_option("--r", r_values, "R values (increasing)");
  sweep->add_option("--zero-out", sweep_n, "zero-out percentage N");

  auto* dist = app.add_subcommand("distances", "normalized distances between init and trained models");
  add_common(dist, dist_c);
  std::string from;
  dist->add_option("--from", from, "models directory (<dir>/seed-<s>/<role>.ckpt) instead of training")
      ->check(CLI::ExistingDirectory);

  auto* robust = app.add_subcommand("robustness", "FGSM accuracy curves of the trained models");
  add_common(robust, robust_c);

  auto* complexity = app.add_subcommand("complexity", "norm and margin proxies of all six models");
  add_common(complexity, complex_c);

  auto* render = app.add_subcommand("render", "SVG decision boundary of a checkpoint");
  add_common(render, render_c);
  std::string ckpt_file, svg_file;
  std::optional<int> grid_res;
  render->add_option("--checkpoint", ckpt_file, "checkpoint to draw")->required()->check(CLI::ExistingFile);
  render->add_option("--svg", svg_file, "output file (default: <out>/boundary.svg)");
  render->add_option("--grid-res", grid_res, "cells per side (default: config margin.grid_res)");

  auto* adv = app.add_subcommand("advinit", "build and save adversarial initializations");
  add_common(adv, adv_c);
  std::optional<int> adv_r;
  std::optional<double> adv_n;
  adv->add_option("--replication", adv_r, "R");
  adv->add_option("--zero-out", adv_n, "N, percent of coordinates zeroed");

  auto* defaults = app.add_subcommand("default-config", "print the default config as JSON");
  bool cifar_defaults = false;
  defaults->add_flag("--cifar", cifar_defaults, "CIFAR-10 subset defaults instead of the toy ones");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*defaults) {
      fmt::print("{}", config_to_json(cifar_defaults ? default_cifar_config() : default_toy_config()));
      return 0;
    }
    if (*setting) {
      ExperimentConfig cfg = resolve_config(setting_c);
      if (k) cfg.setting = *k;
      cfg.validate();
      return run_table(setting_c, cfg, ExperimentKind::Setting);
    }
    if (*grid) return run_table(grid_c, resolve_config(grid_c), ExperimentKind::Grid);
    if (*sweep) {
      ExperimentConfig cfg = resolve_config(sweep_c);
      if (!r_values.empty()) cfg.sweep.r_values = r_values;
      if (sweep_n) cfg.sweep.zero_out_pct = *sweep_n;
      cfg.validate();
      return run_table(sweep_c, cfg, ExperimentKind::SweepR);
    }
    if (*dist) {
      ExperimentConfig cfg = resolve_config(dist_c);
      if (from.empty()) return run_table(dist_c, cfg, ExperimentKind::Distances);
      cfg.experiment = ExperimentKind::Distances;
      finish(distance_table(load_models(from, cfg.seeds)), cfg, out_dir(dist_c, cfg));
      return 0;
    }
    if (*robust) return run_table(robust_c, resolve_config(robust_c), ExperimentKind::Robustness);
    if (*complexity) return run_table(complex_c, resolve_config(complex_c), ExperimentKind::Complexity);
    if (*render) {
      const ExperimentConfig cfg = resolve_config(render_c);
      const Checkpoint ck = load_checkpoint(ckpt_file);
      const ExperimentData data = load_data(cfg);
      const fs::path svg = svg_file.empty() ? out_dir(render_c, cfg) / "boundary.svg" : fs::path(svg_file);
      render_decision_boundary(ck.spec, ck.weights(), data.train, cfg.margin.box,
                               grid_res.value_or(cfg.margin.grid_res), svg);
      fmt::print("{}\n", svg.string());
      return 0;
    }
    if (*adv) {
      ExperimentConfig cfg = resolve_config(adv_c);
      if (adv_r) cfg.adv.replication = *adv_r;
      if (adv_n) cfg.adv.zero_out_pct = *adv_n;
      cfg.validate();
      const fs::path dir = out_dir(adv_c, cfg);
      Session s(cfg, dir);
      attach_log(s, adv_c.quiet);
      ResultsTable table;
      table.experiment = "advinit";
      for (auto seed : cfg.seeds) {
        const auto& a = s.adversarial_init(seed, cfg.adv.replication, cfg.adv.zero_out_pct);
        table.add("advinit", seed, "R", cfg.adv.replication);
        table.add("advinit", seed, "N", cfg.adv.zero_out_pct);
        table.add("advinit", seed, "corpus_train_acc", a.corpus_train_acc);
        table.add("advinit", seed, "epochs", static_cast<double>(a.pretrain_record.epochs.size()));
        save_checkpoint(make_checkpoint(cfg.spec, a.weights, a.pretrain_record.config_fingerprint),
                        dir / "checkpoints" / "advinit" / fmt::format("seed-{}", seed) / "W0A.ckpt");
      }
      table.sort();
      finish(table, cfg, dir);
      return 0;
    }
  } catch (const sgdlab::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
