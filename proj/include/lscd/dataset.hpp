#pragma once

#include <vector>

#include "lscd/matrix.hpp"

namespace lscd {

// Features with ground-truth labels; used for source training and scoring.
struct LabeledSet {
  Matrix features;          // n x d
  std::vector<int> labels;  // n, values in [0, C)
};

// The unlabeled stream the adaptation engine consumes. Labels ride along for
// after-the-fact scoring only; the engine itself is handed feature batches
// and never sees this struct.
struct TargetStream {
  Matrix features;
  std::vector<int> labels;
};

}  // namespace lscd
