#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lscd/network.hpp"

namespace lscd {

// Classic momentum SGD: v <- momentum * v + grad, then param <- param - lr * v.
// Velocity starts at zero and decays geometrically once gradients stop.
inline void sgd_momentum_step(std::vector<double>& params, std::vector<double>& velocity,
                              const std::vector<double>& grad, double lr,
                              double momentum) {
  if (params.size() != velocity.size() || params.size() != grad.size()) {
    throw std::invalid_argument(
        "sgd_momentum_step: params/velocity/grad sizes differ (" +
        std::to_string(params.size()) + "/" + std::to_string(velocity.size()) + "/" +
        std::to_string(grad.size()) + ")");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_momentum_step: lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("sgd_momentum_step: momentum must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    params[i] -= lr * velocity[i];
  }
}

// One optimizer step over a whole network. `velocity` reuses the GradientSet
// layout (zero_gradients(net) is a valid initial state). Only the tensors in
// `selection` move; the batch-norm affine parameters are part of both
// selections, the dense tensors only of kAll.
void apply_sgd_update(Network& net, const GradientSet& grads, GradientSet& velocity,
                      ParamSelection selection, double lr, double momentum);

}  // namespace lscd
