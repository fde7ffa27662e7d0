#include "lscd/benchgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lscd/losses.hpp"
#include "lscd/optimizer.hpp"
#include "lscd/prob.hpp"
#include "lscd/rng.hpp"

namespace lscd {

namespace {

void validate_spec(const SyntheticTaskSpec& s) {
  if (s.num_classes < 2) throw std::invalid_argument("gen_task: num_classes must be >= 2");
  if (s.feature_dim < 2) throw std::invalid_argument("gen_task: feature_dim must be >= 2");
  if (s.samples_per_class == 0) {
    throw std::invalid_argument("gen_task: samples_per_class must be >= 1");
  }
  if (s.stream_length == 0) throw std::invalid_argument("gen_task: stream_length must be >= 1");
  if (!(s.shift.noise_sigma > 0.0)) {
    throw std::invalid_argument("gen_task: noise_sigma must be > 0");
  }
  if (!(s.shift.scale_min > 0.0) || s.shift.scale_min > s.shift.scale_max) {
    throw std::invalid_argument("gen_task: need 0 < scale_min <= scale_max");
  }
  if (!std::isfinite(s.shift.rotation_angle)) {
    throw std::invalid_argument("gen_task: rotation_angle must be finite");
  }
  if (s.shift.mean_translation < 0.0) {
    throw std::invalid_argument("gen_task: mean_translation must be >= 0");
  }
  if (s.imbalance_exponent < 0.0) {
    throw std::invalid_argument("gen_task: imbalance_exponent must be >= 0");
  }
}

std::vector<double> random_unit(DetRng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm < 1e-24);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Smallest pairwise L2 distance; stops early once any pair dips under
// `give_up_below` (the exact minimum no longer matters, the set is rejected).
double min_pairwise_distance(const Matrix& rows, double give_up_below) {
  double best = std::numeric_limits<double>::infinity();
  const double give_up_sq = give_up_below * give_up_below;
  for (std::size_t a = 0; a < rows.rows; ++a) {
    for (std::size_t b = a + 1; b < rows.rows; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < rows.cols; ++j) {
        double d = rows(a, j) - rows(b, j);
        d2 += d * d;
      }
      if (d2 < give_up_sq) return std::sqrt(d2);
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

}  // namespace

std::vector<std::size_t> zipf_counts(std::size_t total, std::size_t classes,
                                     double exponent) {
  if (classes == 0) throw std::invalid_argument("zipf_counts: classes must be >= 1");
  if (exponent < 0.0) throw std::invalid_argument("zipf_counts: exponent must be >= 0");
  std::vector<double> w(classes);
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    w[c] = std::pow(static_cast<double>(c + 1), -exponent);
    sum += w[c];
  }
  std::vector<std::size_t> counts(classes);
  std::vector<std::pair<double, std::size_t>> remainders(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    double quota = static_cast<double>(total) * w[c] / sum;
    counts[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[c];
    remainders[c] = {quota - std::floor(quota), c};
  }
  // Largest remainder first; ties go to the lower class index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    counts[remainders[i % classes].second] += 1;
  }
  return counts;
}

SyntheticTask gen_task(const SyntheticTaskSpec& spec) {
  validate_spec(spec);
  const std::size_t c = spec.num_classes, d = spec.feature_dim;
  DetRng rng(spec.seed);

  // Class directions on the unit sphere; retry the whole set until the
  // closest pair is usable, then push the means out far enough that every
  // pair sits at least two noise stds apart.
  Matrix dirs(c, d);
  double min_dist = 0.0;
  constexpr double kMinDirDistance = 1e-2;
  constexpr int kMaxAttempts = 64;
  bool placed = false;
  for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
    for (std::size_t i = 0; i < c; ++i) {
      std::vector<double> u = random_unit(rng, d);
      std::copy(u.begin(), u.end(), dirs.row(i).begin());
    }
    min_dist = min_pairwise_distance(dirs, kMinDirDistance);
    placed = min_dist >= kMinDirDistance;
  }
  if (!placed) {
    throw std::invalid_argument(
        "gen_task: cannot place " + std::to_string(c) +
        " well-separated class means in dimension " + std::to_string(d));
  }
  double radius = std::max(1.0, 2.0 * spec.shift.noise_sigma / min_dist);
  Matrix source_means(c, d);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < d; ++j) source_means(i, j) = radius * dirs(i, j);
  }

  // Source set: balanced classes, then one global shuffle.
  const std::size_t n_src = c * spec.samples_per_class;
  Matrix src_x(n_src, d);
  std::vector<int> src_y(n_src);
  std::size_t row = 0;
  for (std::size_t cls = 0; cls < c; ++cls) {
    for (std::size_t k = 0; k < spec.samples_per_class; ++k, ++row) {
      for (std::size_t j = 0; j < d; ++j) {
        src_x(row, j) = source_means(cls, j) + spec.shift.noise_sigma * rng.normal();
      }
      src_y[row] = static_cast<int>(cls);
    }
  }
  std::vector<std::size_t> perm(n_src);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  LabeledSet source;
  source.features = Matrix(n_src, d);
  source.labels.resize(n_src);
  for (std::size_t i = 0; i < n_src; ++i) {
    std::copy(src_x.row(perm[i]).begin(), src_x.row(perm[i]).end(),
              source.features.row(i).begin());
    source.labels[i] = src_y[perm[i]];
  }

  // Shift transform on the means: rotate in the plane of two random
  // orthonormal directions, scale per feature, translate along a random
  // direction. All draws happen unconditionally so the stream of random
  // numbers (and hence the samples) is comparable across shift settings.
  std::vector<double> e1 = random_unit(rng, d);
  std::vector<double> e2;
  for (;;) {
    e2 = random_unit(rng, d);
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += e1[j] * e2[j];
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      e2[j] -= dot * e1[j];
      norm += e2[j] * e2[j];
    }
    if (norm > 1e-12) {
      norm = std::sqrt(norm);
      for (double& x : e2) x /= norm;
      break;
    }
  }
  std::vector<double> scales(d);
  for (std::size_t j = 0; j < d; ++j) {
    scales[j] = rng.uniform(spec.shift.scale_min, spec.shift.scale_max);
  }
  std::vector<double> tdir = random_unit(rng, d);

  const double ca = std::cos(spec.shift.rotation_angle);
  const double sa = std::sin(spec.shift.rotation_angle);
  Matrix target_means(c, d);
  for (std::size_t i = 0; i < c; ++i) {
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      a1 += source_means(i, j) * e1[j];
      a2 += source_means(i, j) * e2[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      double rotated = source_means(i, j) + (ca - 1.0) * (a1 * e1[j] + a2 * e2[j]) +
                       sa * (a1 * e2[j] - a2 * e1[j]);
      target_means(i, j) =
          scales[j] * rotated + spec.shift.mean_translation * tdir[j];
    }
  }

  // Target labels by exact apportionment, shuffled; then the samples.
  std::vector<std::size_t> counts =
      zipf_counts(spec.stream_length, c, spec.imbalance_exponent);
  std::vector<int> tgt_y;
  tgt_y.reserve(spec.stream_length);
  for (std::size_t cls = 0; cls < c; ++cls) {
    tgt_y.insert(tgt_y.end(), counts[cls], static_cast<int>(cls));
  }
  rng.shuffle(tgt_y);
  TargetStream target;
  target.features = Matrix(spec.stream_length, d);
  target.labels = tgt_y;
  for (std::size_t i = 0; i < spec.stream_length; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      target.features(i, j) =
          target_means(static_cast<std::size_t>(tgt_y[i]), j) +
          spec.shift.noise_sigma * rng.normal();
    }
  }

  SyntheticTask task;
  task.source = std::move(source);
  task.target = std::move(target);
  task.source_means = std::move(source_means);
  task.target_means = std::move(target_means);
  return task;
}

// ---------------------------------------------------------------------------
// source training

TrainResult train_source(const ArchSpec& arch, const LabeledSet& data,
                         const TrainConfig& cfg) {
  const std::size_t n = data.features.rows;
  if (n < 5) throw std::invalid_argument("train_source: need at least 5 samples");
  if (data.labels.size() != n) {
    throw std::invalid_argument("train_source: feature/label row counts differ");
  }
  if (data.features.cols != arch.input_dim) {
    throw std::invalid_argument("train_source: feature dim does not match the network");
  }
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= arch.num_classes) {
      throw std::invalid_argument("train_source: label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(arch.num_classes) +
                                  ")");
    }
  }
  if (cfg.batch_size < 2) {
    throw std::invalid_argument("train_source: batch_size must be >= 2");
  }

  Network net = init_network(arch, derive_seed(cfg.seed, 1));
  DetRng order_rng(derive_seed(cfg.seed, 2));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  order_rng.shuffle(perm);
  const std::size_t n_val = n / 5;
  const std::size_t n_train = n - n_val;
  if (n_train < 2) throw std::invalid_argument("train_source: too few training samples");
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());

  const std::size_t c = arch.num_classes;
  GradientSet velocity = zero_gradients(net);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(train_idx);
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t nb = std::min(cfg.batch_size, n_train - start);
      if (nb < 2) break;  // too small to normalize; drop the tail
      Matrix batch(nb, arch.input_dim);
      std::vector<int> labels(nb);
      for (std::size_t i = 0; i < nb; ++i) {
        std::size_t src = train_idx[start + i];
        std::copy(data.features.row(src).begin(), data.features.row(src).end(),
                  batch.row(i).begin());
        labels[i] = data.labels[src];
      }
      ForwardTrace tr = forward(net, batch, BnMode::kBatchStats);
      update_running_stats(net, tr);
      Matrix dlogits(nb, c);
      double mean_ce = 0.0;
      for (std::size_t i = 0; i < nb; ++i) {
        auto z = tr.logits.row(i);
        double m = *std::max_element(z.begin(), z.end());
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        lse = m + std::log(lse);
        mean_ce += (lse - z[static_cast<std::size_t>(labels[i])]) / static_cast<double>(nb);
        for (std::size_t k = 0; k < c; ++k) {
          double y = std::exp(z[k] - lse);
          dlogits(i, k) =
              (y - (k == static_cast<std::size_t>(labels[i]) ? 1.0 : 0.0)) /
              static_cast<double>(nb);
        }
      }
      if (!std::isfinite(mean_ce)) {
        throw std::runtime_error("train_source: loss diverged (non-finite)");
      }
      GradientSet grads = backward(net, tr, dlogits, ParamSelection::kAll);
      apply_sgd_update(net, grads, velocity, ParamSelection::kAll, cfg.learning_rate,
                       cfg.momentum);
    }
  }

  TrainResult result;
  result.val_accuracy = 0.0;
  if (!val_idx.empty()) {
    Matrix vx(val_idx.size(), arch.input_dim);
    std::vector<int> vy(val_idx.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
      std::copy(data.features.row(val_idx[i]).begin(), data.features.row(val_idx[i]).end(),
                vx.row(i).begin());
      vy[i] = data.labels[val_idx[i]];
    }
    result.val_accuracy = evaluate_accuracy(net, vx, vy);
  }
  result.net = std::move(net);
  return result;
}

double evaluate_accuracy(const Network& net, const Matrix& features,
                         const std::vector<int>& labels) {
  if (features.rows == 0) throw std::invalid_argument("evaluate_accuracy: empty set");
  if (features.rows != labels.size()) {
    throw std::invalid_argument("evaluate_accuracy: feature/label row counts differ");
  }
  ForwardTrace tr = forward(net, features, BnMode::kRunningStats);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.rows; ++i) {
    if (argmax_tiebreak(tr.logits.row(i)) == static_cast<std::size_t>(labels[i])) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(features.rows);
}

// ---------------------------------------------------------------------------
// feature csv

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

}  // namespace

LabeledSet load_feature_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("feature csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("feature csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> head = split_fields(line);
  if (head.size() < 2 || head[0] != "label") {
    throw std::runtime_error("feature csv: malformed header (expected label,f0,f1,...)");
  }
  for (std::size_t i = 1; i < head.size(); ++i) {
    if (head[i] != "f" + std::to_string(i - 1)) {
      throw std::runtime_error("feature csv: malformed header (expected label,f0,f1,...)");
    }
  }
  const std::size_t d = head.size() - 1;

  std::vector<int> labels;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    std::string where = "feature csv row " + std::to_string(row);
    if (line.empty()) throw std::runtime_error(where + ": empty line");
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != d + 1) {
      throw std::runtime_error(where + ": expected " + std::to_string(d + 1) +
                               " fields, got " + std::to_string(fields.size()));
    }
    long long label = 0;
    {
      const std::string& s = fields[0];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), label);
      if (ec != std::errc() || p != s.data() + s.size() || label < 0) {
        throw std::runtime_error(where + ": label must be a non-negative integer, got '" +
                                 s + "'");
      }
    }
    labels.push_back(static_cast<int>(label));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string& s = fields[i];
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw std::runtime_error(where + ": field '" + s + "' is not a finite number");
      }
      values.push_back(v);
    }
  }
  if (labels.empty()) throw std::runtime_error("feature csv: no data rows");

  LabeledSet out;
  out.features = Matrix(labels.size(), d);
  out.features.data = std::move(values);
  out.labels = std::move(labels);
  return out;
}

void save_feature_csv(const LabeledSet& data, const std::string& path) {
  if (data.features.rows != data.labels.size()) {
    throw std::invalid_argument("save_feature_csv: feature/label row counts differ");
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("feature csv: cannot open '" + path + "' for writing");
  f << "label";
  for (std::size_t j = 0; j < data.features.cols; ++j) f << ",f" << j;
  f << "\n";
  for (std::size_t i = 0; i < data.features.rows; ++i) {
    f << data.labels[i];
    for (std::size_t j = 0; j < data.features.cols; ++j) {
      f << ',' << fmt_double(data.features(i, j));
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("feature csv: write failed for '" + path + "'");
}

std::string dataset_summary(const LabeledSet& data) {
  int max_label = -1;
  for (int y : data.labels) max_label = std::max(max_label, y);
  std::vector<std::size_t> hist(static_cast<std::size_t>(max_label + 1), 0);
  for (int y : data.labels) hist[static_cast<std::size_t>(y)]++;
  std::ostringstream os;
  os << "rows=" << data.features.rows << " dims=" << data.features.cols << " classes=";
  os << hist.size() << " histogram:";
  for (std::size_t c = 0; c < hist.size(); ++c) os << ' ' << c << ':' << hist[c];
  return os.str();
}

}  // namespace lscd
