#include "lscd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace lscd {

namespace {

// Pulls a gradient w.r.t. probabilities back through softmax:
// dz_k = y_k (g_k - sum_c y_c g_c). The entries of the result sum to zero.
std::vector<double> chain_to_logits(const std::vector<double>& y,
                                    const std::vector<double>& g) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += y[i] * g[i];
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * (g[i] - dot);
  return out;
}

void require_log_safe(const ProbVector& y, const char* who) {
  for (double p : y.probs()) {
    if (!(p > 0.0)) {
      throw std::invalid_argument(std::string(who) +
                                  ": requires strictly positive probabilities "
                                  "(apply clamp_simplex first)");
    }
  }
}

struct TermWeights {
  double wcse = 0.0;
  double bcse = 0.0;
  double lsd = 0.0;
};

TermWeights active_terms(LossKind kind, const LossWeights& w) {
  switch (kind) {
    case LossKind::kLscd:     return {w.alpha, w.beta, w.tau};
    case LossKind::kWcse:     return {w.alpha, 0.0, 0.0};
    case LossKind::kBcse:     return {0.0, w.beta, 0.0};
    case LossKind::kLsd:      return {0.0, 0.0, w.tau};
    case LossKind::kWcseBcse: return {w.alpha, w.beta, 0.0};
    case LossKind::kWcseLsd:  return {w.alpha, 0.0, w.tau};
    case LossKind::kBcseLsd:  return {0.0, w.beta, w.tau};
    default:
      throw std::invalid_argument("active_terms: not a composite kind");
  }
}

LossEval composite_eval(const Logits& z, const TermWeights& t, double epsilon,
                        bool detach, double floor) {
  ProbVector raw = softmax(z);
  ProbVector y = floor > 0.0 ? clamp_simplex(raw, floor) : std::move(raw);
  LossEval out;
  out.grad_logits.assign(y.size(), 0.0);
  auto add = [&](double coeff, const LossEval& e) {
    out.value += coeff * e.value;
    for (std::size_t i = 0; i < e.grad_logits.size(); ++i) {
      out.grad_logits[i] += coeff * e.grad_logits[i];
    }
  };
  if (t.wcse != 0.0) add(t.wcse, wcse_loss(y, epsilon, detach));
  if (t.bcse != 0.0) add(t.bcse, bcse_loss(y, epsilon, detach));
  if (t.lsd != 0.0) add(t.lsd, lsd_loss(y));
  return out;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kNone:       return "none";
    case LossKind::kLscd:       return "lscd";
    case LossKind::kWcse:       return "wcse";
    case LossKind::kBcse:       return "bcse";
    case LossKind::kLsd:        return "lsd";
    case LossKind::kWcseBcse:   return "wcse+bcse";
    case LossKind::kWcseLsd:    return "wcse+lsd";
    case LossKind::kBcseLsd:    return "bcse+lsd";
    case LossKind::kEntropy:    return "entropy";
    case LossKind::kHardPlCe:   return "hard_pl_ce";
    case LossKind::kConfidence: return "confidence";
  }
  throw std::invalid_argument("to_string: unknown LossKind");
}

LossKind parse_loss_kind(const std::string& name) {
  for (LossKind k :
       {LossKind::kNone, LossKind::kLscd, LossKind::kWcse, LossKind::kBcse,
        LossKind::kLsd, LossKind::kWcseBcse, LossKind::kWcseLsd, LossKind::kBcseLsd,
        LossKind::kEntropy, LossKind::kHardPlCe, LossKind::kConfidence}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("parse_loss_kind: unknown loss '" + name + "'");
}

bool is_composite(LossKind kind) {
  switch (kind) {
    case LossKind::kLscd:
    case LossKind::kWcse:
    case LossKind::kBcse:
    case LossKind::kLsd:
    case LossKind::kWcseBcse:
    case LossKind::kWcseLsd:
    case LossKind::kBcseLsd:
      return true;
    default:
      return false;
  }
}

bool is_baseline(LossKind kind) {
  return kind == LossKind::kEntropy || kind == LossKind::kHardPlCe ||
         kind == LossKind::kConfidence;
}

void validate_weights(const LossWeights& w) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(w.alpha) || !ok(w.beta) || !ok(w.tau)) {
    throw std::invalid_argument("LossWeights: alpha/beta/tau must be finite and >= 0");
  }
  if (!(w.epsilon > 0.0) || !(w.epsilon < 0.5)) {
    throw std::invalid_argument("LossWeights: epsilon must lie in (0, 0.5)");
  }
}

WeakDensity weak_density(const ProbVector& y, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 0.5)) {
    throw std::invalid_argument("weak_density: epsilon must lie in (0, 0.5)");
  }
  const std::size_t c = y.size();
  WeakDensity out;
  out.predicted_class = argmax_tiebreak(y);
  out.density.assign(c, 1.0 - epsilon / static_cast<double>(c - 1));
  out.density[out.predicted_class] = epsilon;
  return out;
}

std::vector<double> balanced_representation(const ProbVector& y, const WeakDensity& d) {
  std::vector<double> b(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    // y (1 - d) + (1 - y) d, folded to d + y (1 - 2 d).
    b[i] = d.density[i] + y[i] * (1.0 - 2.0 * d.density[i]);
  }
  return b;
}

LossEval wcse_loss(const ProbVector& y, double epsilon, bool detach_pseudo_labels) {
  WeakDensity d = weak_density(y, epsilon);
  require_log_safe(y, "wcse_loss");
  const std::size_t c = y.size();
  LossEval out;
  std::vector<double> grad_y(c);
  for (std::size_t i = 0; i < c; ++i) {
    double e = std::exp(d.density[i]);
    double s = std::sqrt(y[i]);
    double l = std::log(y[i]);
    out.value += -e * s * l;
    // Full: d/dy [-e sqrt(y) log y] = -e (log y + 2) / (2 sqrt(y)).
    // Detached treats sqrt(y) as a constant confidence weight.
    grad_y[i] = detach_pseudo_labels ? -e / s : -e * (l + 2.0) / (2.0 * s);
  }
  out.grad_logits = chain_to_logits(y.probs(), grad_y);
  return out;
}

LossEval bcse_loss(const ProbVector& y, double epsilon, bool detach_pseudo_labels) {
  WeakDensity d = weak_density(y, epsilon);
  require_log_safe(y, "bcse_loss");
  std::vector<double> b = balanced_representation(y, d);
  const std::size_t c = y.size();
  LossEval out;
  std::vector<double> grad_y(c);
  for (std::size_t i = 0; i < c; ++i) {
    double e = std::exp(b[i]);
    double l = std::log(y[i]);
    out.value += -e * y[i] * l;
    // Full: b depends on y with db/dy = 1 - 2 d, so
    // d/dy [-e^b y log y] = -e^b ((1 - 2 d) y log y + log y + 1).
    double base = l + 1.0;
    grad_y[i] = detach_pseudo_labels
                    ? -e * base
                    : -e * ((1.0 - 2.0 * d.density[i]) * y[i] * l + base);
  }
  out.grad_logits = chain_to_logits(y.probs(), grad_y);
  return out;
}

LossEval lsd_loss(const ProbVector& y) {
  const std::size_t c = y.size();
  for (double p : y.probs()) {
    if (!(p > 0.0) || !(p < 1.0)) {
      throw std::invalid_argument(
          "lsd_loss: requires probabilities strictly inside (0, 1) "
          "(apply clamp_simplex first)");
    }
  }
  LossEval out;
  std::vector<double> grad_y(c);
  for (std::size_t i = 0; i < c; ++i) {
    // sum_{j != i} y_j == 1 - y_i on the simplex.
    double q = 1.0 - y[i];
    out.value += y[i] * std::log(q);
    grad_y[i] = std::log(q) - y[i] / q;
  }
  out.grad_logits = chain_to_logits(y.probs(), grad_y);
  return out;
}

LossEval lscd_loss(const Logits& z, const LossWeights& w, bool detach_pseudo_labels,
                   double floor) {
  validate_weights(w);
  return composite_eval(z, {w.alpha, w.beta, w.tau}, w.epsilon, detach_pseudo_labels,
                        floor);
}

LossEval baseline_loss(LossKind kind, const ProbVector& y) {
  require_log_safe(y, "baseline_loss");
  const std::size_t c = y.size();
  LossEval out;
  std::vector<double> grad_y(c, 0.0);
  switch (kind) {
    case LossKind::kEntropy:
      for (std::size_t i = 0; i < c; ++i) {
        out.value += -y[i] * std::log(y[i]);
        grad_y[i] = -(std::log(y[i]) + 1.0);
      }
      break;
    case LossKind::kHardPlCe: {
      std::size_t hat = argmax_tiebreak(y);
      out.value = -std::log(y[hat]);
      grad_y[hat] = -1.0 / y[hat];
      break;
    }
    case LossKind::kConfidence: {
      std::size_t hat = argmax_tiebreak(y);
      out.value = -y[hat];
      grad_y[hat] = -1.0;
      break;
    }
    default:
      throw std::invalid_argument("baseline_loss: kind is not a baseline loss");
  }
  out.grad_logits = chain_to_logits(y.probs(), grad_y);
  return out;
}

LossEval evaluate_loss_on_logits(const Logits& z, LossKind kind, const LossWeights& w,
                                 bool detach_pseudo_labels, double floor) {
  if (kind == LossKind::kNone) {
    throw std::invalid_argument("evaluate_loss_on_logits: kind 'none' has no loss");
  }
  if (is_baseline(kind)) {
    ProbVector raw = softmax(z);
    ProbVector y = floor > 0.0 ? clamp_simplex(raw, floor) : std::move(raw);
    return baseline_loss(kind, y);
  }
  validate_weights(w);
  return composite_eval(z, active_terms(kind, w), w.epsilon, detach_pseudo_labels,
                        floor);
}

}  // namespace lscd
