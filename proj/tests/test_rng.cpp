#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "outlab/rng.hpp"

using namespace outlab;

TEST_CASE("identical seed policy reproduces streams exactly", "[rng]") {
  SeedPolicy a{42}, b{42};
  Rng ra = a.stream(7, 3);
  Rng rb = b.stream(7, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(ra.next_u64() == rb.next_u64());
}

TEST_CASE("distinct trials and tags give distinct draws", "[rng]") {
  SeedPolicy p{42};
  std::set<std::uint64_t> seen;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng r = p.stream(trial);
    for (int i = 0; i < 1000; ++i) seen.insert(r.next_u64());
  }
  REQUIRE(seen.size() == 100000);

  Rng t0 = p.stream(5, 0);
  Rng t1 = p.stream(5, 1);
  bool differ = false;
  for (int i = 0; i < 16; ++i) differ |= (t0.next_u64() != t1.next_u64());
  REQUIRE(differ);
}

TEST_CASE("uniform01 stays in [0,1) with the right mean", "[rng]") {
  Rng r = SeedPolicy{1}.stream(0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE(std::abs(sum / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("gaussian moments", "[rng]") {
  Rng r = SeedPolicy{2}.stream(0);
  double s1 = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double g = r.gaussian();
    s1 += g;
    s2 += g * g;
  }
  REQUIRE(std::abs(s1 / n) < 0.02);
  REQUIRE(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("complex gaussian has unit second absolute moment", "[rng]") {
  Rng r = SeedPolicy{3}.stream(0);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += std::norm(r.gaussian_complex());
  REQUIRE(std::abs(s / n - 1.0) < 0.02);
}

TEST_CASE("rademacher draws are signs with small mean", "[rng]") {
  Rng r = SeedPolicy{4}.stream(0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double v = r.rademacher();
    REQUIRE((v == 1.0 || v == -1.0));
    sum += v;
  }
  REQUIRE(std::abs(sum / n) < 0.02);
}

TEST_CASE("stream output is pinned bit for bit", "[rng]") {
  // frozen first outputs of a few streams; a change here breaks every
  // recorded experiment, so it must be deliberate
  Rng r0 = SeedPolicy{42}.stream(0, 0);
  Rng r1 = SeedPolicy{42}.stream(1, 0);
  Rng r2 = SeedPolicy{7}.stream(0, 2);
  CHECK(r0.next_u64() == UINT64_C(14849927393402702982));
  CHECK(r1.next_u64() == UINT64_C(6186429443678077295));
  CHECK(r2.next_u64() == UINT64_C(9548080635226525798));
}
