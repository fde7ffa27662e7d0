#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lscd/dataset.hpp"
#include "lscd/losses.hpp"
#include "lscd/network.hpp"

namespace lscd {

struct TTAConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  LossKind loss = LossKind::kLscd;
  LossWeights weights;
  bool detach_pseudo_labels = false;
  std::size_t steps_per_batch = 1;
  double prob_floor = kProbFloor;
};

void validate_tta_config(const TTAConfig& cfg);

// Online adaptation over one stream. Each call to adapt_batch predicts with
// the parameters as they were before the call, then (unless loss is kNone)
// takes `steps_per_batch` gradient steps on the batch-norm gamma/beta using
// current-batch normalization statistics. Dense weights and the stored
// running statistics never change; kNone runs frozen running-stats
// inference, the unadapted reference.
class AdaptationEngine {
 public:
  AdaptationEngine(const Network& source, const TTAConfig& cfg);

  // Predicted class per row plus the mean loss the update step saw (0 for
  // kNone). Batches need at least 2 rows; feature count must match the net.
  std::pair<std::vector<std::size_t>, double> adapt_batch(const Matrix& batch);

  const Network& network() const { return net_; }

 private:
  Network net_;
  TTAConfig cfg_;
  GradientSet velocity_;
};

struct BatchRecord {
  std::size_t index = 0;
  std::size_t size = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

struct EpisodeResult {
  std::vector<BatchRecord> batches;
  std::size_t total_seen = 0;
  std::size_t total_correct = 0;
  std::size_t dropped = 0;  // trailing samples too few to form a batch
  double online_accuracy = 0.0;
  double ms_per_item = 0.0;
  std::vector<std::size_t> per_class_correct;
  std::vector<std::size_t> per_class_total;
};

// Consumes the stream in order in batches of cfg.batch_size, scoring each
// batch's predictions against the stream labels after the fact. A fresh
// engine is built from `source` every call, so episodes never leak state
// into one another; a short trailing remainder (< 2 rows) is dropped and
// counted.
EpisodeResult run_episode(const Network& source, const TargetStream& stream,
                          const TTAConfig& cfg);

}  // namespace lscd
