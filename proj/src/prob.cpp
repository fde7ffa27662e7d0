#include "lscd/prob.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lscd {

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw std::invalid_argument("ProbVector: need at least 2 classes, got " +
                                std::to_string(probs_.size()));
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p)) throw std::invalid_argument("ProbVector: non-finite entry");
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("ProbVector: entry " + std::to_string(p) +
                                  " outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("ProbVector: entries sum to " + std::to_string(sum) +
                                ", not 1");
  }
}

ProbVector softmax(std::span<const double> z) {
  if (z.size() < 2) {
    throw std::invalid_argument("softmax: need at least 2 logits, got " +
                                std::to_string(z.size()));
  }
  double m = z[0];
  for (double v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
    m = std::max(m, v);
  }
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return ProbVector(std::move(p));
}

std::size_t argmax_tiebreak(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_tiebreak: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

std::size_t argmax_tiebreak(const ProbVector& y) {
  return argmax_tiebreak(std::span<const double>(y.probs()));
}

ProbVector clamp_simplex(const ProbVector& y, double floor) {
  const std::size_t c = y.size();
  if (!(floor > 0.0) || !(floor < 1.0 / static_cast<double>(c))) {
    throw std::invalid_argument("clamp_simplex: floor must lie in (0, 1/C)");
  }
  std::vector<double> p = y.probs();
  std::vector<bool> fixed(c, false);
  std::size_t num_fixed = 0;
  // Each pass pins everything below the floor and rescales the free entries
  // to carry the remaining mass. Because floor < 1/C the largest free entry
  // always stays above the floor, so at most C-1 passes run.
  for (;;) {
    std::size_t newly = 0;
    double free_mass = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      if (fixed[i]) continue;
      if (p[i] < floor) {
        p[i] = floor;
        fixed[i] = true;
        ++newly;
      } else {
        free_mass += p[i];
      }
    }
    if (newly == 0) break;
    num_fixed += newly;
    double target = 1.0 - floor * static_cast<double>(num_fixed);
    double scale = target / free_mass;
    for (std::size_t i = 0; i < c; ++i) {
      if (!fixed[i]) p[i] *= scale;
    }
  }
  return ProbVector(std::move(p));
}

}  // namespace lscd
