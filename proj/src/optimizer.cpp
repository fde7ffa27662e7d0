#include "lscd/optimizer.hpp"

namespace lscd {

void apply_sgd_update(Network& net, const GradientSet& grads, GradientSet& velocity,
                      ParamSelection selection, double lr, double momentum) {
  if (selection == ParamSelection::kAll) {
    for (std::size_t i = 0; i < net.dense.size(); ++i) {
      sgd_momentum_step(net.dense[i].weight.data, velocity.dweight[i].data,
                        grads.dweight[i].data, lr, momentum);
      sgd_momentum_step(net.dense[i].bias, velocity.dbias[i], grads.dbias[i], lr,
                        momentum);
    }
  }
  for (std::size_t i = 0; i < net.bn.size(); ++i) {
    sgd_momentum_step(net.bn[i].gamma, velocity.dgamma[i], grads.dgamma[i], lr, momentum);
    sgd_momentum_step(net.bn[i].beta_shift, velocity.dbeta[i], grads.dbeta[i], lr,
                      momentum);
  }
}

}  // namespace lscd
