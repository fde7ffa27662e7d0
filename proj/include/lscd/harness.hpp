#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lscd/adapt.hpp"
#include "lscd/benchgen.hpp"

namespace lscd {

enum class TaskSource { kSynthetic, kCsv };
enum class ReportFormat { kCsv, kJson };

// Everything a benchmark run needs, parsed from a key=value config file.
// The seed fields inside `synthetic` and `train` are ignored: each run seed
// from `seeds` drives data generation and training for that repetition.
struct ExperimentConfig {
  TaskSource task = TaskSource::kSynthetic;
  SyntheticTaskSpec synthetic;
  std::string source_csv;
  std::string target_csv;
  std::vector<std::size_t> hidden = {64, 64};
  TrainConfig train;
  TTAConfig tta;
  std::vector<LossKind> methods = {LossKind::kNone, LossKind::kLscd};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_path = "report.csv";
  ReportFormat format = ReportFormat::kCsv;
  // Sensitivity grids; an empty axis pins that weight at its `tta` value.
  std::vector<double> sweep_alpha;
  std::vector<double> sweep_beta;
  std::vector<double> sweep_tau;
  std::vector<double> sweep_epsilon;
};

// Strict parser: unknown keys are rejected so typos cannot silently fall
// back to defaults. Later assignments win; '#' starts a comment.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical serialization of the semantic fields (formatting and comments do
// not participate) and its FNV-1a hash, stamped into every report.
std::string canonical_config_string(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

struct MetricsRecord {
  std::string method;  // report label: loss name, or the ablation row name
  std::uint64_t seed = 0;
  std::size_t batches = 0;
  double online_accuracy = 0.0;
  double acc_mean = 0.0;  // across the seeds that completed for this method
  bool has_std = false;   // sample std needs at least two seeds
  double acc_std = 0.0;
  double ms_per_item = 0.0;
  std::vector<double> per_batch_accuracy;
  std::vector<double> per_class_accuracy;  // -1 marks classes absent from the stream
  double source_val_accuracy = 0.0;
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;  // sorted by (method, seed)
  std::vector<std::string> diagnostics;  // one per failed seed; those seeds are absent
};

// One task + one source model per seed, then every method replays the same
// stream from the same source model. A failure (bad data, diverged training)
// skips that seed and records why; remaining seeds still run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Fixed eight-row study: Baseline (frozen, no adaptation), single terms
// (A: wcse, B: bcse, C: lsd), pairs (D: wcse+bcse, E: wcse+lsd, F: bcse+lsd)
// and the full objective (G). Ignores cfg.methods.
ExperimentResult run_ablation(const ExperimentConfig& cfg);

// Fixed-width text table of an ablation result, one row per method label.
std::string ablation_table(const ExperimentResult& result);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double online_accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order (alpha, beta, tau, epsilon), seed last
  std::vector<std::string> diagnostics;
  bool has_best = false;       // argmax of mean accuracy over completed seeds
  SweepRow best;               // seed field meaningless here
};

// Full-factorial sweep of the loss weights over the configured axes, full
// objective only. Tasks and source models are built once per seed and shared
// across every grid point.
SweepResult run_sensitivity(const ExperimentConfig& cfg);

// Report writers. CSV columns are exactly
//   method,seed,batches,online_accuracy,acc_mean,acc_std,ms_per_item
// with acc_std left empty when only one seed completed; a single leading
// '# config=... generated=...' comment carries the config hash. JSON mirrors
// the same data keyed by method and adds the per-batch/per-class series.
void emit_report(const ExperimentResult& result, const std::string& path,
                 ReportFormat format, std::uint64_t cfg_hash);
void emit_sweep_report(const SweepResult& result, const std::string& path,
                       ReportFormat format, std::uint64_t cfg_hash);

// The pinned desk-scale benchmark used by the acceptance checks; mirrored by
// configs/acceptance.cfg.
ExperimentConfig frozen_benchmark_config();

}  // namespace lscd
