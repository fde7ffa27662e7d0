#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lscd/dataset.hpp"
#include "lscd/network.hpp"

namespace lscd {

// Covariate shift applied to the class means when building the target
// stream: rotate in one random 2-plane, scale each feature, translate, all
// with the same class-conditional noise as the source.
struct ShiftSpec {
  double rotation_angle = 0.0;    // radians
  double mean_translation = 0.0;  // L2 length of the added offset
  double scale_min = 1.0;         // per-feature multiplier range
  double scale_max = 1.0;
  double noise_sigma = 1.0;       // class-conditional gaussian std
};

struct SyntheticTaskSpec {
  std::size_t num_classes = 10;
  std::size_t feature_dim = 32;
  std::size_t samples_per_class = 200;  // source set: balanced, C * this rows
  std::size_t stream_length = 2048;     // target stream rows
  ShiftSpec shift;
  double imbalance_exponent = 0.0;  // Zipf exponent for target label frequencies
  std::uint64_t seed = 0;
};

struct SyntheticTask {
  LabeledSet source;
  TargetStream target;
  Matrix source_means;  // C x D, for diagnostics
  Matrix target_means;
};

// Deterministic: the same spec (seed included) yields byte-identical data.
// Class means are random unit directions pushed apart to at least twice the
// noise std; specs whose class count cannot be separated in the requested
// dimension are rejected.
SyntheticTask gen_task(const SyntheticTaskSpec& spec);

// Largest-remainder apportionment of `total` draws over Zipf weights
// (c+1)^-exponent. Exponent 0 splits evenly (counts differ by at most 1);
// ties in the remainders favor lower class indices.
std::vector<std::size_t> zipf_counts(std::size_t total, std::size_t classes,
                                     double exponent);

struct TrainConfig {
  std::size_t epochs = 40;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Network net;
  double val_accuracy = 0.0;
};

// Supervised source training: 80/20 train/validation split, batch-stats
// forward with running statistics updated each step, cross-entropy on all
// parameters. Throws if the loss goes non-finite.
TrainResult train_source(const ArchSpec& arch, const LabeledSet& data,
                         const TrainConfig& cfg);

// Frozen running-stats accuracy of `net` on a labeled set.
double evaluate_accuracy(const Network& net, const Matrix& features,
                         const std::vector<int>& labels);

// CSV with header `label,f0,f1,...`; one integer label plus feature_dim
// floats per row. Loader errors name the offending data row (1-based).
LabeledSet load_feature_csv(const std::string& path);
void save_feature_csv(const LabeledSet& data, const std::string& path);

// One-line row count + class histogram, for CLI reporting.
std::string dataset_summary(const LabeledSet& data);

}  // namespace lscd
