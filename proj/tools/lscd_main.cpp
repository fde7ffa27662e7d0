#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lscd/harness.hpp"
#include "lscd/rng.hpp"
#include "nlohmann/json.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override: run only this seed");
  cmd->add_option("--out", args.out, "override: output path");
}

lscd::ExperimentConfig load_config(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = lscd::parse_config_file(args.config_path);
  if (args.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(args.seed)};
  if (!args.out.empty()) cfg.out_path = args.out;
  return cfg;
}

void print_diagnostics(const std::vector<std::string>& diagnostics) {
  for (const std::string& d : diagnostics) std::cerr << "warning: " << d << "\n";
}

int cmd_gen_data(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = load_config(args);
  if (cfg.task != lscd::TaskSource::kSynthetic) {
    std::cerr << "gen-data: config must use task = synthetic\n";
    return 1;
  }
  lscd::SyntheticTaskSpec spec = cfg.synthetic;
  spec.seed = cfg.seeds.front();
  lscd::SyntheticTask task = lscd::gen_task(spec);

  std::filesystem::path dir = cfg.out_path.empty() ? "." : cfg.out_path;
  std::filesystem::create_directories(dir);
  std::string source_path = (dir / "source.csv").string();
  std::string target_path = (dir / "target.csv").string();
  lscd::save_feature_csv(task.source, source_path);
  lscd::LabeledSet tgt;
  tgt.features = task.target.features;
  tgt.labels = task.target.labels;
  lscd::save_feature_csv(tgt, target_path);
  std::cout << "wrote " << source_path << ": " << lscd::dataset_summary(task.source)
            << "\n";
  std::cout << "wrote " << target_path << ": " << lscd::dataset_summary(tgt) << "\n";
  return 0;
}

int cmd_train_source(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = load_config(args);
  std::uint64_t seed = cfg.seeds.front();

  lscd::LabeledSet source;
  lscd::ArchSpec arch;
  arch.hidden = cfg.hidden;
  if (cfg.task == lscd::TaskSource::kSynthetic) {
    lscd::SyntheticTaskSpec spec = cfg.synthetic;
    spec.seed = seed;
    source = lscd::gen_task(spec).source;
    arch.num_classes = spec.num_classes;
  } else {
    source = lscd::load_feature_csv(cfg.source_csv);
    int max_label = 1;
    for (int y : source.labels) max_label = std::max(max_label, y);
    arch.num_classes = static_cast<std::size_t>(max_label) + 1;
  }
  arch.input_dim = source.features.cols;

  lscd::TrainConfig tc = cfg.train;
  tc.seed = lscd::derive_seed(seed, 11);
  lscd::TrainResult result = lscd::train_source(arch, source, tc);

  std::string out = cfg.out_path == "report.csv" ? "model.lscdnet" : cfg.out_path;
  lscd::save_network(result.net, out);
  std::cout << "source data: " << lscd::dataset_summary(source) << "\n";
  std::cout << "validation accuracy: " << result.val_accuracy << "\n";
  std::cout << "saved checkpoint: " << out << " (" << result.net.parameter_count()
            << " trainable parameters)\n";
  return 0;
}

int cmd_adapt(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = load_config(args);
  lscd::ExperimentResult result = lscd::run_experiment(cfg);
  print_diagnostics(result.diagnostics);
  lscd::emit_report(result, cfg.out_path, cfg.format, lscd::config_hash(cfg));
  std::cout << "wrote " << cfg.out_path << " (" << result.records.size() << " rows)\n";
  return result.records.empty() && !result.diagnostics.empty() ? 1 : 0;
}

int cmd_ablate(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = load_config(args);
  lscd::ExperimentResult result = lscd::run_ablation(cfg);
  print_diagnostics(result.diagnostics);
  lscd::emit_report(result, cfg.out_path, cfg.format, lscd::config_hash(cfg));
  std::cout << lscd::ablation_table(result);
  std::cout << "wrote " << cfg.out_path << " (" << result.records.size() << " rows)\n";
  return result.records.empty() && !result.diagnostics.empty() ? 1 : 0;
}

int cmd_sweep(const CommonArgs& args) {
  lscd::ExperimentConfig cfg = load_config(args);
  lscd::SweepResult result = lscd::run_sensitivity(cfg);
  print_diagnostics(result.diagnostics);
  lscd::emit_sweep_report(result, cfg.out_path, cfg.format, lscd::config_hash(cfg));
  if (result.has_best) {
    // Same shortest-round-trip formatting as the report footer, so the two lines agree.
    auto fmt = [](double v) { return nlohmann::json(v).dump(); };
    std::cout << "best mean accuracy " << fmt(result.best.online_accuracy) << " at alpha="
              << fmt(result.best.alpha) << " beta=" << fmt(result.best.beta) << " tau="
              << fmt(result.best.tau) << " epsilon=" << fmt(result.best.epsilon) << "\n";
  }
  std::cout << "wrote " << cfg.out_path << " (" << result.rows.size() << " rows)\n";
  return result.rows.empty() && !result.diagnostics.empty() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online test-time adaptation of batch-norm classifiers"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, adapt_args, ablate_args, sweep_args;
  CLI::App* gen = app.add_subcommand(
      "gen-data", "generate a synthetic source set and shifted target stream");
  add_common(gen, gen_args);
  CLI::App* train =
      app.add_subcommand("train-source", "train the source classifier and save it");
  add_common(train, train_args);
  CLI::App* adapt = app.add_subcommand(
      "adapt", "run the configured methods over the target stream and report");
  add_common(adapt, adapt_args);
  CLI::App* ablate =
      app.add_subcommand("ablate", "run the eight-row loss-term ablation study");
  add_common(ablate, ablate_args);
  CLI::App* sweep =
      app.add_subcommand("sweep", "grid sweep of the loss weights, full objective");
  add_common(sweep, sweep_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args);
    if (train->parsed()) return cmd_train_source(train_args);
    if (adapt->parsed()) return cmd_adapt(adapt_args);
    if (ablate->parsed()) return cmd_ablate(ablate_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
