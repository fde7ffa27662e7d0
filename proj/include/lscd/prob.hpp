#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lscd {

// Default lower bound applied to probabilities before anything takes a log.
inline constexpr double kProbFloor = 1e-7;

using Logits = std::vector<double>;

// Point on the probability simplex over C >= 2 classes. Construction
// validates that entries are finite, lie in [0, 1], and sum to 1 within 1e-9.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> probs);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

// Numerically stable softmax: exponents are shifted by the max logit, which
// is the log-sum-exp trick in its division form. Rejects non-finite logits
// and fewer than two classes.
ProbVector softmax(std::span<const double> z);

// Index of the largest entry; exact ties resolve to the lowest index.
std::size_t argmax_tiebreak(std::span<const double> values);
std::size_t argmax_tiebreak(const ProbVector& y);

// Raises every entry below `floor` to exactly `floor` and rescales the rest
// so the output still sums to 1. Rescaling can push further entries below
// the floor, so the fill is iterated until stable; the result is an exact
// fixed point (re-applying returns the same values unchanged) and never
// reorders entries. `floor` must lie in (0, 1/C).
ProbVector clamp_simplex(const ProbVector& y, double floor = kProbFloor);

}  // namespace lscd
