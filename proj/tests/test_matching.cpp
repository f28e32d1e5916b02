#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "outlab/matching.hpp"
#include "outlab/rng.hpp"

using namespace outlab;

TEST_CASE("bottleneck matching on equal multisets is tight", "[matching]") {
  std::vector<Complex> a{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  std::vector<Complex> b{{0.0, 1.01}, {0.02, 0.0}, {1.0, 0.01}};
  BottleneckMatch m = bottleneck_match(a, b);
  REQUIRE(m.matched == 3);
  REQUIRE(m.assignment[0] == 1);
  REQUIRE(m.assignment[1] == 2);
  REQUIRE(m.assignment[2] == 0);
  REQUIRE(std::abs(m.bottleneck - 0.02) < 1e-15);
}

TEST_CASE("greedy pairing is beaten by the bottleneck optimum", "[matching]") {
  // nearest-first pairing would take 0 <-> 0.4 and push the other pair to 1.4
  std::vector<Complex> a{{0.0, 0.0}, {1.0, 0.0}};
  std::vector<Complex> b{{0.4, 0.0}, {-0.4, 0.0}};
  BottleneckMatch m = bottleneck_match(a, b);
  REQUIRE(std::abs(m.bottleneck - 0.6) < 1e-15);
  REQUIRE(m.assignment[0] == 1);
  REQUIRE(m.assignment[1] == 0);
}

TEST_CASE("surplus points stay unmatched", "[matching]") {
  std::vector<Complex> a{{0.0, 0.0}, {5.0, 0.0}, {9.0, 0.0}};
  std::vector<Complex> b{{5.1, 0.0}};
  BottleneckMatch m = bottleneck_match(a, b);
  REQUIRE(m.matched == 1);
  REQUIRE(m.assignment[0] == unmatched);
  REQUIRE(m.assignment[1] == 0);
  REQUIRE(m.assignment[2] == unmatched);
  REQUIRE(std::abs(m.bottleneck - 0.1) < 1e-12);
}

TEST_CASE("random permuted clouds recover the permutation", "[matching]") {
  Rng r = SeedPolicy{40}.stream(0);
  const std::size_t n = 30;
  std::vector<Complex> a(n);
  for (auto& x : a) x = {r.gaussian(), r.gaussian()};
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[static_cast<std::size_t>(r.uniform01() * (i + 1))]);
  std::vector<Complex> b(n);
  for (std::size_t i = 0; i < n; ++i) b[perm[i]] = a[i] + Complex(1e-9 * r.gaussian(), 1e-9 * r.gaussian());
  BottleneckMatch m = bottleneck_match(a, b);
  REQUIRE(m.matched == n);
  for (std::size_t i = 0; i < n; ++i) REQUIRE(m.assignment[i] == perm[i]);
  REQUIRE(m.bottleneck < 1e-8);
}
