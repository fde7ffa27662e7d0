#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lscd/matrix.hpp"

namespace lscd {

// Layer sizes: input -> [dense + batch-norm + relu] per hidden width -> dense head.
struct ArchSpec {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t num_classes = 10;

  bool operator==(const ArchSpec&) const = default;
};

struct DenseLayer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
};

struct BatchNormLayer {
  std::vector<double> gamma;         // scale (trainable during adaptation)
  std::vector<double> beta_shift;    // shift (trainable during adaptation)
  std::vector<double> running_mean;  // frozen source statistics
  std::vector<double> running_var;
  double eps_bn = 1e-5;
  double stats_momentum = 0.1;
};

// Whether normalization uses statistics of the current batch or the stored
// running estimates. Running mode is pure inference: per-sample output is
// independent of whatever else is in the batch.
enum class BnMode { kBatchStats, kRunningStats };

// Everything backward() needs, captured per hidden block during forward.
struct BlockTrace {
  Matrix dense_in;              // n x in
  std::vector<double> mu;       // per-feature mean used for normalization
  std::vector<double> var;      // per-feature (biased, 1/n) variance used
  std::vector<double> inv_std;  // 1 / sqrt(var + eps_bn)
  Matrix x_hat;                 // n x h, normalized pre-affine
  Matrix bn_out;                // n x h, gamma * x_hat + beta (relu mask source)
};

struct ForwardTrace {
  BnMode mode = BnMode::kBatchStats;
  std::size_t batch_size = 0;
  std::vector<BlockTrace> blocks;
  Matrix head_in;  // n x last hidden width (post-relu)
  Matrix logits;   // n x C
};

struct Network {
  ArchSpec arch;
  std::vector<DenseLayer> dense;   // one per hidden block, plus the head last
  std::vector<BatchNormLayer> bn;  // one per hidden block

  std::size_t num_blocks() const { return bn.size(); }
  // Trainable parameters: dense weights and biases plus batch-norm gamma and
  // beta. Running statistics are state, not parameters.
  std::size_t parameter_count() const;
};

// Gaussian init scaled by 1 / sqrt(fan_in), biases zero, gamma 1, beta 0,
// running stats at the identity (mean 0, var 1). Same seed, same network.
Network init_network(const ArchSpec& arch, std::uint64_t seed);

// Runs the batch through the network. Batch-stats mode requires n >= 2 and
// records normalization inputs in the trace for backward(); running-stats
// mode accepts any n >= 1 and never touches the stored statistics.
ForwardTrace forward(const Network& net, const Matrix& batch, BnMode mode);

// Folds the batch statistics captured in `trace` into the running estimates:
// r <- (1 - m) r + m * batch_stat. Source training only.
void update_running_stats(Network& net, const ForwardTrace& trace);

// Which parameters receive gradients. kBnAffine is the adaptation default:
// only gamma and beta, everything else stays zero.
enum class ParamSelection { kBnAffine, kAll };

// Gradients shaped exactly like the trainable tensors of a Network.
// Unselected tensors are present but all-zero.
struct GradientSet {
  std::vector<Matrix> dweight;
  std::vector<std::vector<double>> dbias;
  std::vector<std::vector<double>> dgamma;
  std::vector<std::vector<double>> dbeta;
};

GradientSet zero_gradients(const Network& net);

// Exact reverse pass for the gradients in `dlogits` (n x C, one row per
// sample; the caller folds in any 1/n for a batch-mean loss). The trace must
// come from a batch-stats forward over the same batch; the batch-norm
// backward accounts for the dependence of the batch mean and variance on
// every sample.
GradientSet backward(const Network& net, const ForwardTrace& trace,
                     const Matrix& dlogits, ParamSelection selection);

// Binary checkpoint: fixed magic + format version + architecture header +
// all tensors (including running statistics) as little-endian float64.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace lscd
