#include <doctest.h>

#include <set>
#include <vector>

#include "zsmooth/rng.hpp"

using zsmooth::RngStream;

TEST_CASE("same seed gives the same stream") {
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("derived streams differ by path") {
  auto a = RngStream::derive(7, {1, 2});
  auto b = RngStream::derive(7, {2, 1});
  auto c = RngStream::derive(7, {1, 2});
  const auto va = a.next();
  CHECK(va != b.next());
  CHECK(va == c.next());
  CHECK(RngStream::derive_seed(7, {0}) != RngStream::derive_seed(8, {0}));
}

TEST_CASE("uniform stays strictly inside (0, 1) with mean 1/2") {
  RngStream rng(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("below covers its range evenly") {
  RngStream rng(11);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
