#include "lscd/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <string>

#include "lscd/optimizer.hpp"
#include "lscd/prob.hpp"

namespace lscd {

void validate_tta_config(const TTAConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("TTAConfig: learning_rate must be > 0");
  }
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("TTAConfig: momentum must lie in [0, 1)");
  }
  if (cfg.batch_size < 2) {
    throw std::invalid_argument("TTAConfig: batch_size must be >= 2");
  }
  if (cfg.steps_per_batch == 0) {
    throw std::invalid_argument("TTAConfig: steps_per_batch must be >= 1");
  }
  if (!(cfg.prob_floor > 0.0)) {
    throw std::invalid_argument("TTAConfig: prob_floor must be > 0");
  }
  if (is_composite(cfg.loss)) validate_weights(cfg.weights);
}

AdaptationEngine::AdaptationEngine(const Network& source, const TTAConfig& cfg)
    : net_(source), cfg_(cfg) {
  validate_tta_config(cfg_);
  velocity_ = zero_gradients(net_);
}

std::pair<std::vector<std::size_t>, double> AdaptationEngine::adapt_batch(
    const Matrix& batch) {
  if (batch.rows < 2) {
    throw std::invalid_argument(
        "adapt_batch: need at least 2 samples per batch, got " +
        std::to_string(batch.rows));
  }

  if (cfg_.loss == LossKind::kNone) {
    ForwardTrace tr = forward(net_, batch, BnMode::kRunningStats);
    std::vector<std::size_t> preds(batch.rows);
    for (std::size_t i = 0; i < batch.rows; ++i) {
      preds[i] = argmax_tiebreak(tr.logits.row(i));
    }
    return {std::move(preds), 0.0};
  }

  const std::size_t n = batch.rows;
  const std::size_t c = net_.arch.num_classes;
  std::vector<std::size_t> preds;
  double first_mean_loss = 0.0;
  for (std::size_t step = 0; step < cfg_.steps_per_batch; ++step) {
    ForwardTrace tr = forward(net_, batch, BnMode::kBatchStats);
    if (step == 0) {
      // Predictions come from the parameters as they stood before any update
      // on this batch.
      preds.resize(n);
      for (std::size_t i = 0; i < n; ++i) preds[i] = argmax_tiebreak(tr.logits.row(i));
    }
    Matrix dlogits(n, c);
    double mean_loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto zrow = tr.logits.row(i);
      LossEval e =
          evaluate_loss_on_logits(Logits(zrow.begin(), zrow.end()), cfg_.loss,
                                  cfg_.weights, cfg_.detach_pseudo_labels,
                                  cfg_.prob_floor);
      mean_loss += e.value / static_cast<double>(n);
      for (std::size_t k = 0; k < c; ++k) {
        dlogits(i, k) = e.grad_logits[k] / static_cast<double>(n);
      }
    }
    if (step == 0) first_mean_loss = mean_loss;
    GradientSet grads = backward(net_, tr, dlogits, ParamSelection::kBnAffine);
    apply_sgd_update(net_, grads, velocity_, ParamSelection::kBnAffine,
                     cfg_.learning_rate, cfg_.momentum);
  }
  return {std::move(preds), first_mean_loss};
}

EpisodeResult run_episode(const Network& source, const TargetStream& stream,
                          const TTAConfig& cfg) {
  validate_tta_config(cfg);
  if (stream.features.cols != source.arch.input_dim) {
    throw std::invalid_argument(
        "run_episode: stream has " + std::to_string(stream.features.cols) +
        " features, network expects " + std::to_string(source.arch.input_dim));
  }
  if (stream.features.rows != stream.labels.size()) {
    throw std::invalid_argument("run_episode: feature/label row counts differ");
  }
  for (int y : stream.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= source.arch.num_classes) {
      throw std::invalid_argument("run_episode: stream label " + std::to_string(y) +
                                  " outside [0, " +
                                  std::to_string(source.arch.num_classes) + ")");
    }
  }

  AdaptationEngine engine(source, cfg);
  EpisodeResult result;
  result.per_class_correct.assign(source.arch.num_classes, 0);
  result.per_class_total.assign(source.arch.num_classes, 0);

  const std::size_t n = stream.features.rows;
  auto t0 = std::chrono::steady_clock::now();
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t nb = std::min(cfg.batch_size, n - start);
    if (nb < 2) {
      result.dropped += nb;
      break;
    }
    Matrix batch = slice_rows(stream.features, start, nb);
    auto [preds, mean_loss] = engine.adapt_batch(batch);

    BatchRecord rec;
    rec.index = batch_index++;
    rec.size = nb;
    rec.mean_loss = mean_loss;
    for (std::size_t i = 0; i < nb; ++i) {
      auto truth = static_cast<std::size_t>(stream.labels[start + i]);
      result.per_class_total[truth] += 1;
      if (preds[i] == truth) {
        rec.correct += 1;
        result.per_class_correct[truth] += 1;
      }
    }
    rec.accuracy = static_cast<double>(rec.correct) / static_cast<double>(nb);
    result.total_seen += nb;
    result.total_correct += rec.correct;
    result.batches.push_back(rec);
  }
  auto t1 = std::chrono::steady_clock::now();

  if (result.total_seen > 0) {
    result.online_accuracy = static_cast<double>(result.total_correct) /
                             static_cast<double>(result.total_seen);
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.ms_per_item = ms / static_cast<double>(result.total_seen);
  }
  return result;
}

}  // namespace lscd
