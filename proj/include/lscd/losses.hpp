#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lscd/prob.hpp"

namespace lscd {

// Which objective drives the adaptation step. `kNone` means frozen
// inference (no update at all); the composite variants switch individual
// terms of the full objective on and off; the last three are standalone
// baseline objectives.
enum class LossKind {
  kNone,
  kLscd,      // all three terms
  kWcse,      // weak-confidence term only
  kBcse,      // balanced-confidence term only
  kLsd,       // low-saturation term only
  kWcseBcse,  // pairwise combinations
  kWcseLsd,
  kBcseLsd,
  kEntropy,   // baselines
  kHardPlCe,
  kConfidence,
};

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
bool is_composite(LossKind kind);
bool is_baseline(LossKind kind);

// Term weights for the composite objective plus the weak-density epsilon.
struct LossWeights {
  double alpha = 0.25;    // weak-confidence term
  double beta = 1.0;      // balanced-confidence term
  double tau = 1.5;       // low-saturation term
  double epsilon = 0.01;  // weak-density mass on the predicted class
};

void validate_weights(const LossWeights& w);

// Weak class-density estimate: the predicted class gets epsilon, every other
// class gets 1 - epsilon/(C-1). Deliberately anti-correlated with the
// prediction so confidence-sensitive terms push mass off the argmax.
struct WeakDensity {
  std::vector<double> density;
  std::size_t predicted_class = 0;
};

WeakDensity weak_density(const ProbVector& y, double epsilon);

// Balanced representation b = y (1 - d) + (1 - y) d used inside the
// balanced-confidence term; exposed for inspection and tests.
std::vector<double> balanced_representation(const ProbVector& y, const WeakDensity& d);

// A scalar loss value together with its gradient in logit space (i.e. the
// softmax Jacobian is already applied). Gradient entries always sum to zero
// because softmax is shift-invariant.
struct LossEval {
  double value = 0.0;
  std::vector<double> grad_logits;
};

// The three composite terms. `y` must be log-safe (strictly positive
// entries; run it through clamp_simplex first). When
// `detach_pseudo_labels` is true the sqrt(y) / exp(b) modulation factors are
// treated as constants in the gradient, mirroring a stop-gradient on the
// pseudo-label side.
LossEval wcse_loss(const ProbVector& y, double epsilon, bool detach_pseudo_labels = false);
LossEval bcse_loss(const ProbVector& y, double epsilon, bool detach_pseudo_labels = false);

// Saturation-penalty term sum_c y_c log(1 - y_c). Its logit gradient tends
// to a nonzero constant as one logit dominates, which is the whole point:
// entropy-style objectives go flat there.
LossEval lsd_loss(const ProbVector& y);

// Weighted sum alpha * wcse + beta * bcse + tau * lsd evaluated from raw
// logits (softmax + clamp applied internally; pass floor = 0 to skip the
// clamp for analysis runs).
LossEval lscd_loss(const Logits& z, const LossWeights& w,
                   bool detach_pseudo_labels = false, double floor = kProbFloor);

// Baseline objectives (entropy minimization, cross-entropy against the hard
// argmax pseudo-label, negative max-probability). `kind` must be one of the
// three baseline kinds.
LossEval baseline_loss(LossKind kind, const ProbVector& y);

// Single entry point used by the adaptation engine: softmax, clamp, then
// dispatch on `kind` (any kind except kNone). Composite kinds use the
// weights masked down to their active terms.
LossEval evaluate_loss_on_logits(const Logits& z, LossKind kind, const LossWeights& w,
                                 bool detach_pseudo_labels = false,
                                 double floor = kProbFloor);

}  // namespace lscd
