#include <doctest.h>

#include <cmath>

#include "oransim/rng.hpp"

using namespace oransim;

TEST_CASE("streams with the same seed agree, different seeds diverge") {
  RngStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  bool any_diff = false;
  RngStream a2(42);
  for (int i = 0; i < 10; ++i) any_diff |= (a2.uniform() != c.uniform());
  CHECK(any_diff);
}

TEST_CASE("exponential draws are unit mean") {
  RngStream r(7);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.exponential();
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal draws have zero mean and unit variance") {
  RngStream r(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("keyed draws are pure functions of the key") {
  KeyedRng k(99);
  const double a = k.exponential(1, 2, 3, 4);
  CHECK(a == k.exponential(1, 2, 3, 4));
  CHECK(a != k.exponential(1, 2, 3, 5));
  KeyedRng k2(100);
  CHECK(a != k2.exponential(1, 2, 3, 4));
}

TEST_CASE("derive_seed separates tags") {
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2, 1) != derive_seed(1, 2, 2));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
