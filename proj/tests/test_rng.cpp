#include "synaug/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

using synaug::derive_seed;
using synaug::Rng;

TEST_CASE("derive_seed separates labels and indices") {
  std::set<std::uint64_t> seen;
  for (const char* label : {"train", "test", "synth", "head"}) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      seen.insert(derive_seed(42, label, i));
    }
    seen.insert(derive_seed(42, label));
  }
  CHECK(seen.size() == 4 * 51);
  CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
  CHECK(derive_seed(1, "x") != derive_seed(2, "x"));
}

TEST_CASE("same seed reproduces the stream") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.normal() == b.normal());
    CHECK(a.below(13) == b.below(13));
  }
}

TEST_CASE("uniform and below stay in range") {
  Rng rng(3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++hist[k];
  }
  for (int h : hist) {
    // Binomial(70000, 1/7): sd ~ 92.
    CHECK(std::abs(h - 10000) < 500);
  }
}

TEST_CASE("normal has unit moments") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sum2 / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("gamma and beta means") {
  Rng rng(5);
  const int n = 100000;
  for (double shape : {0.5, 1.0, 3.0}) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += rng.gamma(shape);
    }
    // Var = shape, so the sample mean has sd sqrt(shape / n).
    CHECK(std::abs(sum / n - shape) < 5.0 * std::sqrt(shape / n));
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = rng.beta(2.0, 5.0);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    sum += b;
  }
  CHECK(std::abs(sum / n - 2.0 / 7.0) < 0.005);
}

TEST_CASE("shuffle permutes") {
  Rng rng(9);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(std::span<int>(w));
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}
