#include "lscd/benchgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lscd/rng.hpp"

using lscd::ArchSpec;
using lscd::LabeledSet;
using lscd::SyntheticTask;
using lscd::SyntheticTaskSpec;
using lscd::TrainConfig;

namespace {

SyntheticTaskSpec base_spec() {
  SyntheticTaskSpec s;
  s.num_classes = 4;
  s.feature_dim = 8;
  s.samples_per_class = 50;
  s.stream_length = 400;
  s.shift.noise_sigma = 1.0;
  s.seed = 21;
  return s;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "lscd_benchgen_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("generation is deterministic in the spec") {
  SyntheticTask a = lscd::gen_task(base_spec());
  SyntheticTask b = lscd::gen_task(base_spec());
  CHECK(a.source.features.data == b.source.features.data);
  CHECK(a.source.labels == b.source.labels);
  CHECK(a.target.features.data == b.target.features.data);
  CHECK(a.target.labels == b.target.labels);

  SyntheticTaskSpec other = base_spec();
  other.seed = 22;
  SyntheticTask c = lscd::gen_task(other);
  CHECK(a.source.features.data != c.source.features.data);
}

TEST_CASE("identity shift leaves the class means untouched") {
  SyntheticTask task = lscd::gen_task(base_spec());  // all-identity shift
  CHECK(task.target_means.data == task.source_means.data);

  // Empirical per-class target means track the source means.
  const std::size_t c = 4, d = 8;
  for (std::size_t cls = 0; cls < c; ++cls) {
    std::vector<double> mean(d, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < task.target.features.rows; ++i) {
      if (static_cast<std::size_t>(task.target.labels[i]) != cls) continue;
      for (std::size_t j = 0; j < d; ++j) mean[j] += task.target.features(i, j);
      ++count;
    }
    REQUIRE(count > 50);
    for (std::size_t j = 0; j < d; ++j) {
      mean[j] /= static_cast<double>(count);
      CHECK(std::abs(mean[j] - task.source_means(cls, j)) <=
            5.0 / std::sqrt(static_cast<double>(count)));
    }
  }
}

TEST_CASE("a non-trivial shift moves the means") {
  SyntheticTaskSpec s = base_spec();
  s.shift.rotation_angle = 0.5;
  s.shift.mean_translation = 1.0;
  s.shift.scale_min = 0.7;
  s.shift.scale_max = 1.3;
  SyntheticTask task = lscd::gen_task(s);
  double moved = 0.0;
  for (std::size_t i = 0; i < task.source_means.data.size(); ++i) {
    moved += std::abs(task.target_means.data[i] - task.source_means.data[i]);
  }
  CHECK(moved > 1.0);
}

TEST_CASE("class means sit at least two noise stds apart") {
  SyntheticTaskSpec s = base_spec();
  s.shift.noise_sigma = 2.5;
  SyntheticTask task = lscd::gen_task(s);
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 8; ++j) {
        double diff = task.source_means(a, j) - task.source_means(b, j);
        d2 += diff * diff;
      }
      min_dist = std::min(min_dist, std::sqrt(d2));
    }
  }
  CHECK(min_dist >= 2.0 * 2.5 - 1e-9);  // exact up to rounding of the radius
}

TEST_CASE("source set is balanced and shuffled") {
  SyntheticTask task = lscd::gen_task(base_spec());
  std::vector<std::size_t> hist(4, 0);
  for (int y : task.source.labels) hist[static_cast<std::size_t>(y)]++;
  for (std::size_t c = 0; c < 4; ++c) CHECK(hist[c] == 50);
  // A contiguous class block at the front would mean no shuffle happened.
  bool all_same = true;
  for (std::size_t i = 1; i < 20; ++i) {
    if (task.source.labels[i] != task.source.labels[0]) all_same = false;
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("zipf apportionment is exact") {
  std::vector<std::size_t> even = lscd::zipf_counts(1000, 7, 0.0);
  std::size_t total = 0, lo = 1000, hi = 0;
  for (std::size_t c : even) {
    total += c;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(total == 1000);
  CHECK(hi - lo <= 1);

  // Hand-worked largest-remainder case: quotas 60/11, 30/11, 20/11.
  std::vector<std::size_t> lr = lscd::zipf_counts(10, 3, 1.0);
  CHECK(lr == std::vector<std::size_t>{5, 3, 2});

  CHECK_THROWS_AS(lscd::zipf_counts(10, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lscd::zipf_counts(10, 3, -1.0), std::invalid_argument);
}

TEST_CASE("stream label frequencies follow the zipf quota") {
  // Chi-square against the zipf expectation, 20 seeds, C=10, df=9;
  // the 1% critical value is 21.666.
  std::size_t passes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticTaskSpec s = base_spec();
    s.num_classes = 10;
    s.feature_dim = 16;
    s.samples_per_class = 5;
    s.stream_length = 2048;
    s.imbalance_exponent = 1.0;
    s.seed = seed;
    SyntheticTask task = lscd::gen_task(s);
    std::vector<std::size_t> hist(10, 0);
    for (int y : task.target.labels) hist[static_cast<std::size_t>(y)]++;

    double wsum = 0.0;
    std::vector<double> w(10);
    for (std::size_t c = 0; c < 10; ++c) {
      w[c] = std::pow(static_cast<double>(c + 1), -1.0);
      wsum += w[c];
    }
    double stat = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
      double expected = 2048.0 * w[c] / wsum;
      double diff = static_cast<double>(hist[c]) - expected;
      stat += diff * diff / expected;
    }
    if (stat < 21.666) ++passes;
  }
  CHECK(passes >= 19);
}

TEST_CASE("impossible mean placement is rejected") {
  SyntheticTaskSpec s = base_spec();
  s.num_classes = 5000;
  s.feature_dim = 2;
  s.samples_per_class = 1;
  s.stream_length = 8;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);

  // Low-dimensional but feasible still works.
  SyntheticTaskSpec ok = base_spec();
  ok.num_classes = 10;
  ok.feature_dim = 2;
  ok.samples_per_class = 3;
  ok.stream_length = 16;
  CHECK_NOTHROW(lscd::gen_task(ok));
}

TEST_CASE("spec validation") {
  SyntheticTaskSpec s = base_spec();
  s.shift.noise_sigma = 0.0;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);
  s = base_spec();
  s.shift.scale_min = 1.4;
  s.shift.scale_max = 0.7;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);
  s = base_spec();
  s.feature_dim = 1;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);
  s = base_spec();
  s.num_classes = 1;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);
  s = base_spec();
  s.imbalance_exponent = -0.5;
  CHECK_THROWS_AS(lscd::gen_task(s), std::invalid_argument);
}

TEST_CASE("feature csv round-trips exactly") {
  SyntheticTaskSpec s = base_spec();
  s.samples_per_class = 5;
  SyntheticTask task = lscd::gen_task(s);
  std::string path = (temp_dir() / "roundtrip.csv").string();
  lscd::save_feature_csv(task.source, path);
  LabeledSet back = lscd::load_feature_csv(path);
  CHECK(back.features.rows == task.source.features.rows);
  CHECK(back.features.cols == task.source.features.cols);
  CHECK(back.features.data == task.source.features.data);
  CHECK(back.labels == task.source.labels);

  // Save -> load -> save produces identical bytes.
  std::string path2 = (temp_dir() / "roundtrip2.csv").string();
  lscd::save_feature_csv(back, path2);
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("feature csv loader diagnostics") {
  auto write = [&](const std::string& name, const std::string& text) {
    std::string p = (temp_dir() / name).string();
    std::ofstream f(p, std::ios::trunc);
    f << text;
    return p;
  };
  auto expect_error = [](const std::string& path, const std::string& needle) {
    try {
      lscd::load_feature_csv(path);
      FAIL_CHECK("expected a loader error mentioning '" << needle << "'");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  LabeledSet tiny = lscd::load_feature_csv(
      write("ok.csv", "label,f0,f1\n0,1.5,-2.0\n1,0.25,3.5\n"));
  CHECK(tiny.features.rows == 2);
  CHECK(tiny.features(1, 1) == 3.5);
  CHECK(tiny.labels == std::vector<int>{0, 1});

  expect_error(write("empty.csv", ""), "empty file");
  expect_error(write("headeronly.csv", "label,f0,f1\n"), "no data rows");
  expect_error(write("badheader.csv", "label,x0,x1\n0,1,2\n"), "header");
  expect_error(write("ragged.csv", "label,f0,f1\n0,1.0,2.0\n1,1.0,2.0,3.0\n"),
               "row 2");
  expect_error(write("nonnum.csv", "label,f0,f1\n0,1.0,banana\n"), "banana");
  expect_error(write("neglabel.csv", "label,f0,f1\n-3,1.0,2.0\n"), "label");
  expect_error(write("floatlabel.csv", "label,f0,f1\n1.5,1.0,2.0\n"), "label");
  CHECK_THROWS_AS(lscd::load_feature_csv((temp_dir() / "missing.csv").string()),
                  std::runtime_error);
}

TEST_CASE("source training separates a linearly separable toy task") {
  // Two well-separated gaussian blobs.
  lscd::DetRng rng(31);
  const std::size_t n_per = 100, d = 4;
  LabeledSet data;
  data.features = lscd::Matrix(2 * n_per, d);
  data.labels.resize(2 * n_per);
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    int cls = i < n_per ? 0 : 1;
    data.labels[i] = cls;
    for (std::size_t j = 0; j < d; ++j) {
      data.features(i, j) = (cls == 0 ? -3.0 : 3.0) + 0.5 * rng.normal();
    }
  }
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 7;
  lscd::TrainResult result = lscd::train_source(ArchSpec{d, {8}, 2}, data, cfg);
  CHECK(result.val_accuracy >= 0.99);
  CHECK(lscd::evaluate_accuracy(result.net, data.features, data.labels) >= 0.99);
}

TEST_CASE("training is deterministic and zero epochs keep the init") {
  SyntheticTask task = lscd::gen_task(base_spec());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 9;
  ArchSpec arch{8, {8}, 4};
  lscd::TrainResult a = lscd::train_source(arch, task.source, cfg);
  lscd::TrainResult b = lscd::train_source(arch, task.source, cfg);
  CHECK(a.net.dense[0].weight.data == b.net.dense[0].weight.data);
  CHECK(a.net.bn[0].running_mean == b.net.bn[0].running_mean);
  CHECK(a.val_accuracy == b.val_accuracy);

  TrainConfig other = cfg;
  other.seed = 10;
  lscd::TrainResult c = lscd::train_source(arch, task.source, other);
  CHECK(a.net.dense[0].weight.data != c.net.dense[0].weight.data);

  TrainConfig zero = cfg;
  zero.epochs = 0;
  lscd::TrainResult untouched = lscd::train_source(arch, task.source, zero);
  for (double g : untouched.net.bn[0].gamma) CHECK(g == 1.0);
  for (double v : untouched.net.bn[0].running_var) CHECK(v == 1.0);
}

TEST_CASE("training rejects bad inputs and divergence") {
  SyntheticTask task = lscd::gen_task(base_spec());
  TrainConfig cfg;
  cfg.epochs = 2;

  CHECK_THROWS_AS(lscd::train_source(ArchSpec{8, {8}, 3}, task.source, cfg),
                  std::invalid_argument);  // labels reach 3 but C=3 means [0,3)
  CHECK_THROWS_AS(lscd::train_source(ArchSpec{5, {8}, 4}, task.source, cfg),
                  std::invalid_argument);  // wrong feature width

  // Batch-norm soaks up almost any step size; it takes an overflow-scale
  // rate to push the loss to non-finite territory.
  TrainConfig wild = cfg;
  wild.learning_rate = 1e200;
  CHECK_THROWS_AS(lscd::train_source(ArchSpec{8, {8}, 4}, task.source, wild),
                  std::runtime_error);
}

TEST_CASE("dataset summary names rows and histogram") {
  LabeledSet tiny;
  tiny.features = lscd::Matrix(3, 2, 0.0);
  tiny.labels = {1, 0, 1};
  std::string s = lscd::dataset_summary(tiny);
  CHECK(s.find("rows=3") != std::string::npos);
  CHECK(s.find("0:1") != std::string::npos);
  CHECK(s.find("1:2") != std::string::npos);
}
