#include "lscd/prob.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "lscd/rng.hpp"

using lscd::ProbVector;

TEST_CASE("probability vector validation") {
  CHECK_NOTHROW(ProbVector({0.7, 0.2, 0.1}));
  CHECK_NOTHROW(ProbVector({1.0, 0.0}));
  CHECK_NOTHROW(ProbVector({0.999999999, 1e-9, 0.0}));
  CHECK_THROWS_AS(ProbVector({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({0.5, std::nan("")}), std::invalid_argument);
}

TEST_CASE("softmax basics") {
  ProbVector y = lscd::softmax(std::vector<double>{0.0, 0.0});
  CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.5).epsilon(1e-12));

  ProbVector u = lscd::softmax(std::vector<double>{3.25, 3.25, 3.25, 3.25});
  for (std::size_t i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-12));

  ProbVector t = lscd::softmax(std::vector<double>{std::log(2.0), 0.0});
  CHECK(t[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(t[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(lscd::softmax(std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(lscd::softmax(std::vector<double>{1.0, std::nan("")}),
                  std::invalid_argument);
  double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lscd::softmax(std::vector<double>{1.0, inf}), std::invalid_argument);
}

TEST_CASE("softmax survives large logits and stays normalized") {
  lscd::DetRng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t c = 2 + rng.uniform_index(44);
    std::vector<double> z(c);
    for (double& v : z) v = rng.uniform(-500.0, 500.0);
    ProbVector y = lscd::softmax(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(y[i] >= 0.0);
      sum += y[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax is shift invariant") {
  lscd::DetRng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t c = 2 + rng.uniform_index(20);
    std::vector<double> z(c), zs(c);
    double shift = rng.uniform(-100.0, 100.0);
    for (std::size_t i = 0; i < c; ++i) {
      z[i] = rng.uniform(-50.0, 50.0);
      zs[i] = z[i] + shift;
    }
    ProbVector a = lscd::softmax(z);
    ProbVector b = lscd::softmax(zs);
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    }
  }
}

TEST_CASE("argmax tie-break picks the lowest index") {
  CHECK(lscd::argmax_tiebreak(std::vector<double>{0.2, 0.5, 0.3}) == 1);
  CHECK(lscd::argmax_tiebreak(std::vector<double>{0.4, 0.4, 0.2}) == 0);
  CHECK(lscd::argmax_tiebreak(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0);
  CHECK(lscd::argmax_tiebreak(std::vector<double>{-1.0, -3.0, -1.0}) == 0);

  // Matches the max logit through softmax when the max is unique.
  lscd::DetRng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(7);
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    std::size_t zi = lscd::argmax_tiebreak(z);
    CHECK(lscd::argmax_tiebreak(lscd::softmax(z)) == zi);
  }
}

TEST_CASE("clamp_simplex pins small entries and renormalizes") {
  ProbVector a = lscd::clamp_simplex(ProbVector({1.0, 0.0}), 1e-7);
  CHECK(a[0] == doctest::Approx(1.0 - 1e-7).epsilon(1e-12));
  CHECK(a[1] == 1e-7);

  ProbVector b = lscd::clamp_simplex(ProbVector({0.999999999, 1e-9, 0.0}), 1e-7);
  CHECK(b[1] == 1e-7);
  CHECK(b[2] == 1e-7);
  CHECK(b[0] == doctest::Approx(1.0 - 2e-7).epsilon(1e-12));

  // Nothing below the floor: exact no-op.
  std::vector<double> u{0.25, 0.25, 0.25, 0.25};
  ProbVector c = lscd::clamp_simplex(ProbVector(u), 1e-7);
  for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == u[i]);
}

TEST_CASE("clamp_simplex is exactly idempotent and order preserving") {
  lscd::DetRng rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t c = 2 + rng.uniform_index(44);
    // Spiky draws so several entries land under the floor.
    std::vector<double> y(c);
    double sum = 0.0;
    for (double& v : y) {
      v = std::pow(rng.uniform(), 12.0) + 1e-15;
      sum += v;
    }
    for (double& v : y) v /= sum;
    ProbVector once = lscd::clamp_simplex(ProbVector(y), 1e-7);
    ProbVector twice = lscd::clamp_simplex(once, 1e-7);
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(twice[i] == once[i]);  // exact fixed point
      CHECK(once[i] >= 1e-7);
    }
    // Order preserved.
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        if (y[i] < y[j]) CHECK(once[i] <= once[j]);
      }
    }
  }
}

TEST_CASE("clamp_simplex floor bounds") {
  ProbVector y({0.5, 0.3, 0.2});
  CHECK_THROWS_AS(lscd::clamp_simplex(y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lscd::clamp_simplex(y, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(lscd::clamp_simplex(y, 1.0 / 3.0), std::invalid_argument);
  CHECK_NOTHROW(lscd::clamp_simplex(y, 0.33));
}
