// rogat-lab: experiment runner for the RoGAT defense study.
//
//   rogat-lab <command> [--config FILE] [--set key=value ...] [--out DIR]
//
// Commands: ratio-experiment, defense-sweep, ablation, hyper-sweep,
// ratio-track, train, attack. Reports land in --out as report.csv +
// report.json; train/attack additionally write their artifacts there.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "rogat/experiments.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "rogat_out";
};

rogat::KvConfig assemble(const CommonOpts& opts) {
  rogat::KvConfig cfg;
  if (!opts.config_path.empty()) cfg = rogat::KvConfig::from_file(opts.config_path);
  for (const auto& kv : opts.sets) cfg.apply_set(kv);
  return cfg;
}

int finish(const rogat::Report& report, const CommonOpts& opts) {
  std::filesystem::create_directories(opts.out_dir);
  report.write_csv(opts.out_dir + "/report.csv");
  report.write_json(opts.out_dir + "/report.json");
  std::cout << report.summary();
  std::cout << (report.all_complete() ? "all cells complete\n"
                                      : "WARNING: partial results (cell timeout)\n");
  return report.all_complete() ? 0 : 1;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "flat key=value config file");
  cmd->add_option("--set", opts.sets, "override, e.g. --set rogat.alpha=0.5")
      ->take_all();
  cmd->add_option("--out", opts.out_dir, "output directory (default rogat_out)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RoGAT experiment lab"};
  app.require_subcommand(1);
  CommonOpts opts;

  auto* ratio = app.add_subcommand("ratio-experiment",
                                   "GAT accuracy on calibrated random graphs per link ratio");
  auto* sweep = app.add_subcommand("defense-sweep",
                                   "accuracy of model kinds across perturbation rates");
  auto* ablation = app.add_subcommand("ablation", "RoGAT variants across perturbation rates");
  auto* hyper = app.add_subcommand("hyper-sweep",
                                   "accuracy grid over lambda and alpha(=gamma)");
  auto* track = app.add_subcommand("ratio-track",
                                   "fake/real edge-weight ratio traces per rate");
  auto* train = app.add_subcommand("train", "train one model on one (possibly poisoned) graph");
  auto* attack = app.add_subcommand("attack", "generate and save one perturbation");
  for (auto* cmd : {ratio, sweep, ablation, hyper, track, train, attack})
    add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    rogat::KvConfig cfg = assemble(opts);
    if (ratio->parsed()) return finish(rogat::cmd_ratio_experiment(cfg), opts);
    if (sweep->parsed()) return finish(rogat::cmd_defense_sweep(cfg), opts);
    if (ablation->parsed()) return finish(rogat::cmd_ablation(cfg), opts);
    if (hyper->parsed()) return finish(rogat::cmd_hyper_sweep(cfg), opts);
    if (track->parsed()) return finish(rogat::cmd_ratio_track(cfg), opts);
    if (train->parsed()) {
      std::filesystem::create_directories(opts.out_dir);
      return finish(rogat::cmd_train(cfg, opts.out_dir), opts);
    }
    if (attack->parsed()) {
      std::filesystem::create_directories(opts.out_dir);
      return finish(rogat::cmd_attack(cfg, opts.out_dir), opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
